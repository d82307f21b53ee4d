"""Toy encoder-decoder heatmap regressor.

Three resolution levels, 32 channels at the widest; maps a 2-channel
(earlier frame, later frame) input to a single-channel heatmap. Output is
linear; inference clamps to [0, 1].
"""

from __future__ import annotations

import torch
from torch import nn


def _block(in_ch: int, out_ch: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(in_ch, out_ch, 3, padding=1),
        nn.ReLU(inplace=True),
        nn.Conv2d(out_ch, out_ch, 3, padding=1),
        nn.ReLU(inplace=True),
    )


class PairToHeatmapNet(nn.Module):
    def __init__(self) -> None:
        super().__init__()
        self.enc1 = _block(2, 16)
        self.enc2 = _block(16, 32)
        self.bottleneck = _block(32, 32)
        self.pool = nn.MaxPool2d(2)
        self.up2 = nn.ConvTranspose2d(32, 32, 2, stride=2)
        self.dec2 = _block(64, 32)
        self.up1 = nn.ConvTranspose2d(32, 16, 2, stride=2)
        self.dec1 = _block(32, 16)
        self.head = nn.Conv2d(16, 1, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        e1 = self.enc1(x)
        e2 = self.enc2(self.pool(e1))
        b = self.bottleneck(self.pool(e2))
        d2 = self.dec2(torch.cat([self.up2(b), e2], dim=1))
        d1 = self.dec1(torch.cat([self.up1(d2), e1], dim=1))
        return self.head(d1)
