"""A deliberately tiny 3-level 3D encoder-decoder for segmentation."""

from __future__ import annotations

import torch
from torch import nn


def _block(cin: int, cout: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv3d(cin, cout, kernel_size=3, padding=1),
        nn.InstanceNorm3d(cout),
        nn.ReLU(inplace=True),
        nn.Conv3d(cout, cout, kernel_size=3, padding=1),
        nn.InstanceNorm3d(cout),
        nn.ReLU(inplace=True),
    )


class TinyUNet3D(nn.Module):
    """3-level encoder-decoder with skip connections.

    out_channels=1 means binary (sigmoid) output; more channels mean
    per-class logits (softmax).
    """

    def __init__(self, out_channels: int = 1, width: int = 8):
        super().__init__()
        w = width
        self.enc1 = _block(1, w)
        self.enc2 = _block(w, 2 * w)
        self.enc3 = _block(2 * w, 4 * w)
        self.pool = nn.MaxPool3d(2)
        self.up2 = nn.ConvTranspose3d(4 * w, 2 * w, kernel_size=2, stride=2)
        self.dec2 = _block(4 * w, 2 * w)
        self.up1 = nn.ConvTranspose3d(2 * w, w, kernel_size=2, stride=2)
        self.dec1 = _block(2 * w, w)
        self.head = nn.Conv3d(w, out_channels, kernel_size=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        e1 = self.enc1(x)
        e2 = self.enc2(self.pool(e1))
        e3 = self.enc3(self.pool(e2))
        d2 = self.dec2(torch.cat([self.up2(e3), e2], dim=1))
        d1 = self.dec1(torch.cat([self.up1(d2), e1], dim=1))
        return self.head(d1)
