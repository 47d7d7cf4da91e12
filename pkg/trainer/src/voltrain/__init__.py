"""voltrain: tiny 3D segmentation training harness for generated
volume datasets."""

__version__ = "0.1.0"

from .data import DatasetIndex, PatchSampler, load_index, read_nifti  # noqa: F401
from .model import TinyUNet3D  # noqa: F401
from .train import DivergenceError, TrainConfig, dice_loss, dice_score, train  # noqa: F401
