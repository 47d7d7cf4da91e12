"""Training loop: dice loss on random patches, held-out dice evaluation.

The point is a property-level learnability proof for generated datasets,
not a competitive segmentation model.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
import torch

from .data import DatasetIndex, PatchSampler, load_index
from .model import TinyUNet3D

log = logging.getLogger(__name__)

_HEAD_CHANNELS = {"binary": 1, "shape_class": 33}


@dataclass
class TrainConfig:
    manifest: str
    patch_size: int = 64
    batch_size: int = 2
    iterations: int = 2000
    learning_rate: float = 3e-3
    label_mode: str = "binary"
    eval_fraction: float = 0.2
    seed: int = 0
    out_dir: str = "train_out"
    eval_every: int = 0  # 0 = only at the end
    model_width: int = 8


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""


def dice_loss(logits: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Soft dice loss; binary for 1-channel logits, macro over classes
    otherwise."""
    eps = 1e-5
    if logits.shape[1] == 1:
        prob = torch.sigmoid(logits)[:, 0]
        tgt = (target > 0).float()
        inter = (prob * tgt).sum(dim=(1, 2, 3))
        denom = prob.sum(dim=(1, 2, 3)) + tgt.sum(dim=(1, 2, 3))
        return (1 - (2 * inter + eps) / (denom + eps)).mean()
    prob = torch.softmax(logits, dim=1)
    onehot = torch.nn.functional.one_hot(
        target, num_classes=logits.shape[1]
    ).permute(0, 4, 1, 2, 3).float()
    inter = (prob * onehot).sum(dim=(2, 3, 4))
    denom = prob.sum(dim=(2, 3, 4)) + onehot.sum(dim=(2, 3, 4))
    return (1 - (2 * inter + eps) / (denom + eps)).mean()


def dice_score(pred_fg: np.ndarray, true_fg: np.ndarray) -> float:
    """2|P∩G| / (|P|+|G|) over foreground voxels; 1.0 if both empty."""
    p = int(pred_fg.sum())
    g = int(true_fg.sum())
    if p + g == 0:
        return 1.0
    return 2.0 * int((pred_fg & true_fg).sum()) / (p + g)


def split_indices(n: int, eval_fraction: float, rng: np.random.Generator):
    n_eval = max(1, int(round(n * eval_fraction)))
    if n < 2 * n_eval:
        raise ValueError(
            f"dataset of {n} samples too small for eval fraction "
            f"{eval_fraction}"
        )
    order = rng.permutation(n)
    return list(order[n_eval:]), list(order[:n_eval])


def evaluate(
    model: TinyUNet3D,
    sampler: PatchSampler,
    eval_indices: list[int],
    device: str = "cpu",
) -> float:
    """Mean foreground dice over deterministic centre patches."""
    model.eval()
    scores = []
    with torch.no_grad():
        for idx in eval_indices:
            patch = sampler.center_patch(idx)
            if patch is None:
                continue
            x, y = patch
            xt = torch.from_numpy(x)[None, None].to(device)
            logits = model(xt)
            if logits.shape[1] == 1:
                pred = (torch.sigmoid(logits)[0, 0] > 0.5).cpu().numpy()
            else:
                pred = (logits.argmax(dim=1)[0] > 0).cpu().numpy()
            scores.append(dice_score(pred, y > 0))
    model.train()
    return float(np.mean(scores)) if scores else 0.0


def build_model(config: TrainConfig, index: DatasetIndex) -> TinyUNet3D:
    if config.label_mode not in _HEAD_CHANNELS:
        raise ValueError(f"unsupported label_mode {config.label_mode!r}")
    if index.label_mode != config.label_mode:
        raise ValueError(
            f"dataset label_mode {index.label_mode!r} does not match "
            f"configured {config.label_mode!r}"
        )
    return TinyUNet3D(
        out_channels=_HEAD_CHANNELS[config.label_mode],
        width=config.model_width,
    )


def train(config: TrainConfig) -> dict:
    """Run training; returns and writes a metrics record.

    Metrics include the untrained-baseline dice on the same held-out
    split so learnability is a single subtraction.
    """
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    index = load_index(config.manifest)
    train_idx, eval_idx = split_indices(
        len(index.pairs), config.eval_fraction, rng
    )
    sampler = PatchSampler(index, config.patch_size, rng=rng)
    model = build_model(config, index)
    device = "cpu"
    model.to(device)

    baseline_dice = evaluate(model, sampler, eval_idx, device)

    opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    losses: list[float] = []
    for it in range(config.iterations):
        batch_x, batch_y = [], []
        for _ in range(config.batch_size):
            x, y = sampler.random_patch(train_idx)
            batch_x.append(x)
            batch_y.append(y)
        xt = torch.from_numpy(np.stack(batch_x))[:, None].to(device)
        yt = torch.from_numpy(np.stack(batch_y)).to(device)
        opt.zero_grad()
        loss = dice_loss(model(xt), yt)
        if not torch.isfinite(loss):
            raise DivergenceError(f"loss non-finite at iteration {it}")
        loss.backward()
        opt.step()
        losses.append(float(loss.item()))
        if config.eval_every and (it + 1) % config.eval_every == 0:
            log.info(
                "iter %d loss %.4f dice %.4f",
                it + 1,
                losses[-1],
                evaluate(model, sampler, eval_idx, device),
            )

    final_dice = evaluate(model, sampler, eval_idx, device)
    metrics = {
        "config": asdict(config),
        "iterations": config.iterations,
        "final_train_loss": losses[-1] if losses else None,
        "smoothed_loss_first_100": _smoothed(losses, 100),
        "smoothed_loss_last_100": _smoothed(losses, -100),
        "baseline_dice": baseline_dice,
        "heldout_dice": final_dice,
        "dice_margin": final_dice - baseline_dice,
        "skipped_files": index.skipped,
        "n_train": len(train_idx),
        "n_eval": len(eval_idx),
    }
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")
    np.savetxt(out / "loss_curve.txt", np.asarray(losses))
    return metrics


def _smoothed(losses: list[float], window: int) -> float | None:
    if not losses:
        return None
    chunk = losses[:window] if window > 0 else losses[window:]
    return float(np.mean(chunk))


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="voltrain",
        description="Train a tiny 3D segmentation net on a generated dataset.",
    )
    parser.add_argument("manifest", help="path to the dataset manifest.json")
    parser.add_argument("--patch-size", type=int, default=64)
    parser.add_argument("--batch-size", type=int, default=2)
    parser.add_argument("--iterations", type=int, default=2000)
    parser.add_argument("--learning-rate", type=float, default=3e-3)
    parser.add_argument(
        "--label-mode", default="binary", choices=sorted(_HEAD_CHANNELS)
    )
    parser.add_argument("--eval-fraction", type=float, default=0.2)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", default="train_out")
    parser.add_argument("--eval-every", type=int, default=0)
    parser.add_argument("--model-width", type=int, default=8)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    config = TrainConfig(
        manifest=args.manifest,
        patch_size=args.patch_size,
        batch_size=args.batch_size,
        iterations=args.iterations,
        learning_rate=args.learning_rate,
        label_mode=args.label_mode,
        eval_fraction=args.eval_fraction,
        seed=args.seed,
        out_dir=args.out_dir,
        eval_every=args.eval_every,
        model_width=args.model_width,
    )
    try:
        metrics = train(config)
    except (ValueError, DivergenceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"final loss {metrics['final_train_loss']:.4f}, held-out dice "
        f"{metrics['heldout_dice']:.4f} (baseline {metrics['baseline_dice']:.4f})"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
