"""The two reference regressors.

Conv model: stacked conv+ReLU+pool blocks over one 200x200 image, then a
dense head to 16 outputs. Point-cloud model: shared per-point MLPs with
ReLU, a max-pooled global feature concatenated back onto per-point local
features, further shared layers and a max-pooled regression head. Max
aggregation makes the cloud model invariant to input point order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch import nn


@dataclass(frozen=True)
class TrainConfig:
    kind: str = "pointcloud"  # "conv" | "pointcloud"
    image_size: int = 200
    n_points: int = 512
    learning_rate: float | None = None  # default by kind: 1e-4 conv, 5e-4 cloud
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    conv_channels: tuple = (16, 32, 64, 128)
    conv_dense: int = 256
    point_mlp: tuple = (64, 64, 128, 1024)
    point_head: tuple = (512, 256)

    def validate(self) -> "TrainConfig":
        if self.kind not in ("conv", "pointcloud"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.kind == "pointcloud" and self.n_points < 8:
            raise ValueError("n_points must be >= 8")
        if self.kind == "conv" and self.image_size < 16:
            raise ValueError("image_size must be >= 16")
        return self

    @property
    def lr(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return 1e-4 if self.kind == "conv" else 5e-4

    @property
    def paper_comparable(self) -> bool:
        """True when the input size matches the published configurations."""
        if self.kind == "conv":
            return self.image_size == 200
        return self.n_points in (512, 1024)


class ConvRegressor(nn.Module):
    """conv->ReLU->pool blocks, then two dense layers to 16 outputs."""

    def __init__(self, cfg: TrainConfig):
        super().__init__()
        layers = []
        in_ch = 1
        size = cfg.image_size
        for ch in cfg.conv_channels:
            layers += [nn.Conv2d(in_ch, ch, 3, padding=1), nn.ReLU(), nn.MaxPool2d(2)]
            in_ch = ch
            size //= 2
        self.features = nn.Sequential(*layers)
        self.head = nn.Sequential(
            nn.Flatten(),
            nn.Linear(in_ch * size * size, cfg.conv_dense),
            nn.ReLU(),
            nn.Linear(cfg.conv_dense, 16),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() == 3:
            x = x[:, None, :, :]
        return self.head(self.features(x))


class PointCloudRegressor(nn.Module):
    """Shared per-point MLPs with max aggregation (order-invariant)."""

    def __init__(self, cfg: TrainConfig):
        super().__init__()
        widths = cfg.point_mlp
        stem = []
        in_ch = 3
        for w in widths[:2]:
            stem += [nn.Conv1d(in_ch, w, 1), nn.ReLU()]
            in_ch = w
        self.local_net = nn.Sequential(*stem)  # per-point local feature
        tail = []
        for w in widths[2:]:
            tail += [nn.Conv1d(in_ch, w, 1), nn.ReLU()]
            in_ch = w
        self.global_net = nn.Sequential(*tail)
        self.global_width = widths[-1]
        head = []
        in_ch = widths[1] + self.global_width
        for w in cfg.point_head:
            head += [nn.Conv1d(in_ch, w, 1), nn.ReLU()]
            in_ch = w
        self.head_net = nn.Sequential(*head)
        self.out = nn.Linear(in_ch, 16)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        # x: (batch, n_points, 3) -> channels-first for shared 1x1 convs
        x = x.transpose(1, 2)
        local = self.local_net(x)  # (b, w1, n)
        glob = self.global_net(local).max(dim=2).values  # (b, wG)
        fused = torch.cat(
            [local, glob[:, :, None].expand(-1, -1, local.shape[2])], dim=1
        )
        per_point = self.head_net(fused)
        pooled = per_point.max(dim=2).values
        return self.out(pooled)


def build_conv_model(cfg: TrainConfig) -> ConvRegressor:
    cfg.validate()
    if cfg.kind != "conv":
        raise ValueError("cfg.kind must be 'conv'")
    torch.manual_seed(cfg.seed)
    return ConvRegressor(cfg)


def build_pc_model(cfg: TrainConfig) -> PointCloudRegressor:
    cfg.validate()
    if cfg.kind != "pointcloud":
        raise ValueError("cfg.kind must be 'pointcloud'")
    torch.manual_seed(cfg.seed)
    return PointCloudRegressor(cfg)


def build_model(cfg: TrainConfig) -> nn.Module:
    return build_conv_model(cfg) if cfg.kind == "conv" else build_pc_model(cfg)
