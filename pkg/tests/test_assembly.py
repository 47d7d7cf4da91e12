import numpy as np
import pytest

from primvox import (
    GenConfig,
    LabelMode,
    PrimitiveObject,
    ProfileParams,
    ShapeClass,
    XyRule,
    ZRule,
    composite,
    extract_shell,
    overlap_ratio,
    place_object,
    sort_by_volume,
)
from primvox.geometry import EllipseShape

from oracles import shell_oracle


def make_object(occupancy, class_id=0):
    occupancy = np.asarray(occupancy, dtype=bool)
    return PrimitiveObject(
        occupancy=occupancy,
        shape_class=ShapeClass.from_id(class_id),
        params=ProfileParams(1.0, 1.0, 1.0, 3, occupancy.shape[2] - 1),
        base_shape=EllipseShape(1.0, 1.0),
        r_max=float(occupancy.shape[0] // 2),
        volume=int(occupancy.sum()),
    )


def cube_object(side, box=None, class_id=0):
    # odd local box so the centre voxel is well defined
    box = box if box is not None else side + (side + 1) % 2
    occ = np.zeros((box, box, box), dtype=bool)
    occ[:side, :side, :side] = True
    return make_object(occ, class_id)


class ScriptedRng:
    """Feeds a fixed sequence to rng.integers calls."""

    def __init__(self, values):
        self.values = list(values)

    def integers(self, lo, hi):
        return self.values.pop(0)


class TestSortByVolume:
    def test_stable_descending(self):
        objs = []
        for v in [5, 9, 9, 2]:
            occ = np.zeros((3, 3, 11), dtype=bool)
            occ.flat[:v] = True
            objs.append(make_object(occ))
        out = sort_by_volume(objs)
        assert [o.volume for o in out] == [9, 9, 5, 2]
        assert out[0] is objs[1] and out[1] is objs[2]

    def test_single(self):
        obj = cube_object(2)
        assert sort_by_volume([obj]) == [obj]

    def test_all_equal_preserves_order(self):
        objs = [cube_object(2) for _ in range(4)]
        assert sort_by_volume(objs) == objs

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            sort_by_volume([])


class TestOverlapRatio:
    def test_disjoint(self):
        a = np.zeros((4, 4, 4), dtype=bool)
        b = np.zeros((4, 4, 4), dtype=bool)
        a[0, 0, 0] = True
        b[1, 1, 1] = True
        assert overlap_ratio(a, b) == 0.0

    def test_contained(self):
        a = np.ones((4, 4, 4), dtype=bool)
        b = np.zeros((4, 4, 4), dtype=bool)
        b[:2] = True
        assert overlap_ratio(a, b) == 1.0

    def test_fraction(self):
        a = np.zeros((10, 10, 10), dtype=bool)
        b = np.zeros((10, 10, 10), dtype=bool)
        b[0].flat[:100] = True
        a[0].flat[:37] = True
        assert overlap_ratio(a, b) == 0.37

    def test_empty_candidate_rejected(self):
        a = np.zeros((2, 2, 2), dtype=bool)
        with pytest.raises(ValueError):
            overlap_ratio(a, np.zeros_like(a))


class TestPlaceObject:
    def test_first_object_accepted_immediately(self):
        cfg = GenConfig(grid=(32, 32, 32))
        state = np.zeros(cfg.grid, dtype=bool)
        rec = place_object(state, cube_object(3), cfg, np.random.default_rng(0))
        assert rec.accepted
        assert rec.attempts == 1
        assert rec.overlap_ratio_at_acceptance == 0.0
        assert state.sum() == rec.in_bounds_volume

    def test_full_grid_rejects_without_overlap(self):
        cfg = GenConfig(grid=(16, 16, 16), overlap_enabled=False, max_iter=25)
        state = np.ones(cfg.grid, dtype=bool)
        rec = place_object(state, cube_object(3), cfg, np.random.default_rng(0))
        assert not rec.accepted
        assert rec.attempts == cfg.max_iter

    def test_forced_center_with_known_ratio(self):
        # 5^3 cube placed so exactly 25 of its 125 voxels hit occupancy
        cfg = GenConfig(grid=(32, 32, 32), overlap_threshold=0.25)
        state = np.zeros(cfg.grid, dtype=bool)
        state[10:15, 10:15, 14] = True  # one 5x5 plane in the cube's path
        obj = cube_object(5)
        rng = ScriptedRng([12, 12, 12])  # cube covers [10,15) on each axis
        rec = place_object(state, obj, cfg, rng)
        assert rec.accepted
        assert rec.overlap_ratio_at_acceptance == 25 / 125
        assert rec.overlap_ratio_at_acceptance < cfg.overlap_threshold

    def test_clipping_counts_in_bounds_only(self):
        cfg = GenConfig(grid=(16, 16, 16))
        state = np.zeros(cfg.grid, dtype=bool)
        obj = cube_object(3, box=3)
        rng = ScriptedRng([0, 0, 0])  # half the cube falls outside
        rec = place_object(state, obj, cfg, rng)
        assert rec.accepted
        assert rec.in_bounds_volume == 2 * 2 * 2


class TestExtractShell:
    def test_single_voxel(self):
        g = np.zeros((3, 3, 3), dtype=bool)
        g[1, 1, 1] = True
        assert np.array_equal(extract_shell(g), g)

    def test_solid_cube_shell(self):
        g = np.zeros((5, 5, 5), dtype=bool)
        g[1:4, 1:4, 1:4] = True
        shell = extract_shell(g)
        assert int(shell.sum()) == 26
        assert not shell[2, 2, 2]

    def test_empty(self):
        g = np.zeros((4, 4, 4), dtype=bool)
        assert not extract_shell(g).any()

    def test_shell_subset_of_fill(self):
        rng = np.random.default_rng(1)
        g = rng.random((10, 10, 10)) > 0.5
        shell = extract_shell(g)
        assert not (shell & ~g).any()

    def test_oracle_equivalence(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            dims = tuple(rng.integers(2, 12, size=3))
            g = rng.random(dims) > 0.6
            assert np.array_equal(extract_shell(g), shell_oracle(g))


class TestComposite:
    def test_single_object(self):
        cfg = GenConfig(grid=(20, 20, 20), label_mode=LabelMode.SHAPE_CLASS)
        obj = cube_object(3, class_id=5)
        s, m = composite([(obj, (10, 10, 10))], cfg)
        filled = int(obj.occupancy.sum())
        assert int((m == 6).sum()) == filled
        shell = extract_shell(obj.occupancy)
        assert int((s == 128).sum()) == int(shell.sum())
        assert set(np.unique(s)) <= {0, 128}

    def test_smaller_overwrites(self):
        cfg = GenConfig(grid=(20, 20, 20), label_mode=LabelMode.SHAPE_CLASS)
        big = cube_object(7, class_id=1)
        small = cube_object(3, class_id=2)
        s, m = composite([(big, (10, 10, 10)), (small, (10, 10, 10))], cfg)
        # overlap region carries the later, smaller object's label
        assert int((m == 3).sum()) == small.volume
        assert int((m == 2).sum()) == big.volume - small.volume

    def test_nested_contours_remain_visible(self):
        cfg = GenConfig(grid=(20, 20, 20))
        big = cube_object(9, class_id=1)
        small = cube_object(3, class_id=2)
        s, m = composite([(big, (10, 10, 10)), (small, (10, 10, 10))], cfg)
        # the small object sits strictly inside; its shell shows in S
        assert int((s > 0).sum()) > int(extract_shell(big.occupancy).sum())

    def test_zero_placements(self):
        cfg = GenConfig(grid=(20, 20, 20))
        s, m = composite([], cfg)
        assert not s.any() and not m.any()

    def test_instance_labels_and_dtype(self):
        cfg = GenConfig(grid=(20, 20, 20), label_mode=LabelMode.INSTANCE)
        a = cube_object(3)
        b = cube_object(3)
        s, m = composite([(a, (5, 5, 5)), (b, (14, 14, 14))], cfg)
        assert m.dtype == np.uint16
        assert set(np.unique(m)) == {0, 1, 2}

    def test_binary_mode(self):
        cfg = GenConfig(grid=(20, 20, 20), label_mode=LabelMode.BINARY)
        s, m = composite([(cube_object(3), (10, 10, 10))], cfg)
        assert set(np.unique(m)) == {0, 1}
        assert np.all(m[s > 0] == 1)


class TestGenConfig:
    def test_validate_rejects_bad_values(self):
        for bad in [
            GenConfig(grid=(8, 96, 96)),
            GenConfig(m_objects=0),
            GenConfig(overlap_threshold=1.5),
            GenConfig(max_iter=0),
            GenConfig(allowed_xy=()),
        ]:
            with pytest.raises(ValueError):
                bad.validate()

    def test_round_trip(self):
        cfg = GenConfig(
            grid=(32, 48, 64),
            label_mode=LabelMode.BINARY,
            allowed_xy=(XyRule.ELLIPSE,),
            allowed_z=(ZRule.CONE, ZRule.PILLAR),
            master_seed=99,
        )
        assert GenConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="intencity"):
            GenConfig.from_dict({"intencity": 5})

    def test_allowed_classes_sorted(self):
        cfg = GenConfig(allowed_xy=(XyRule.ELLIPSE,), allowed_z=(ZRule.CONE,))
        classes = cfg.allowed_classes
        assert len(classes) == 1
        assert classes[0] == ShapeClass(XyRule.ELLIPSE, ZRule.CONE)
        ids = [c.class_id for c in GenConfig().allowed_classes]
        assert ids == list(range(32))
