"""Training loop: MAE loss, AMSGrad Adam, per-step cosine decay.

Targets are trained in z-scored space (per-measurement statistics of the
training targets) and de-normalized back to millimeters at prediction;
the statistics travel with the checkpoint. Runs are seed-reproducible up
to torch backend nondeterminism.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .dataio import write_predictions_csv
from .models import TrainConfig, build_model


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""


@dataclass
class TargetStats:
    mean: np.ndarray  # (16,)
    std: np.ndarray  # (16,)

    @classmethod
    def fit(cls, targets_mm: np.ndarray) -> "TargetStats":
        t = np.asarray(targets_mm, dtype=np.float64)
        std = t.std(axis=0)
        std[std <= 1e-9] = 1.0
        return cls(mean=t.mean(axis=0), std=std)

    def normalize(self, targets_mm: np.ndarray) -> np.ndarray:
        return (targets_mm - self.mean) / self.std

    def denormalize(self, normed: np.ndarray) -> np.ndarray:
        return normed * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "TargetStats":
        return cls(np.asarray(d["mean"]), np.asarray(d["std"]))


@dataclass
class TrainResult:
    model: nn.Module
    cfg: TrainConfig
    target_stats: TargetStats
    history: list  # one dict per epoch


def _loader(inputs: torch.Tensor, targets: torch.Tensor, batch: int, gen: torch.Generator):
    order = torch.randperm(len(inputs), generator=gen)
    for i in range(0, len(inputs), batch):
        idx = order[i : i + batch]
        yield inputs[idx], targets[idx]


def train(model: nn.Module, dataset, cfg: TrainConfig, out_dir=None,
          log=lambda msg: None) -> TrainResult:
    """dataset: (inputs, targets_mm) arrays, optionally + (val_inputs,
    val_targets_mm). Inputs must already be normalized per the dataset
    conventions (train statistics only)."""
    cfg.validate()
    inputs, targets_mm = dataset[0], dataset[1]
    val = dataset[2:] if len(dataset) > 2 else None
    stats = TargetStats.fit(targets_mm)

    x = torch.as_tensor(np.asarray(inputs), dtype=torch.float32)
    y = torch.as_tensor(stats.normalize(np.asarray(targets_mm)), dtype=torch.float32)
    torch.manual_seed(cfg.seed)
    gen = torch.Generator().manual_seed(cfg.seed)

    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr, amsgrad=True)
    steps_per_epoch = math.ceil(len(x) / cfg.batch_size)
    total_steps = cfg.epochs * steps_per_epoch
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=total_steps)
    loss_fn = nn.L1Loss()

    history = []
    for epoch in range(cfg.epochs):
        model.train()
        epoch_loss = 0.0
        for bx, by in _loader(x, y, cfg.batch_size, gen):
            opt.zero_grad()
            loss = loss_fn(model(bx), by)
            if not torch.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}")
            loss.backward()
            opt.step()
            sched.step()
            epoch_loss += loss.item() * len(bx)
        entry = {
            "epoch": epoch,
            "train_mae_norm": epoch_loss / len(x),
            "lr": float(opt.param_groups[0]["lr"]),
        }
        entry["train_mae_mm"] = float(
            np.abs(stats.denormalize(predict_normed(model, x)) - np.asarray(targets_mm)).mean()
        )
        if val is not None:
            vx = torch.as_tensor(np.asarray(val[0]), dtype=torch.float32)
            pred = stats.denormalize(predict_normed(model, vx))
            entry["val_mae_mm"] = float(np.abs(pred - np.asarray(val[1])).mean())
        history.append(entry)
        log(f"epoch {epoch}: {entry}")

    result = TrainResult(model=model, cfg=cfg, target_stats=stats, history=history)
    if out_dir is not None:
        save_checkpoint(result, out_dir)
    return result


@torch.no_grad()
def predict_normed(model: nn.Module, x: torch.Tensor, batch: int = 64) -> np.ndarray:
    model.eval()
    outs = []
    for i in range(0, len(x), batch):
        outs.append(model(x[i : i + batch]).numpy())
    return np.concatenate(outs, axis=0).astype(np.float64)


def predict_mm(result: TrainResult, inputs) -> np.ndarray:
    x = torch.as_tensor(np.asarray(inputs), dtype=torch.float32)
    return result.target_stats.denormalize(predict_normed(result.model, x))


def predict_to_csv(result: TrainResult, inputs, ids, path) -> np.ndarray:
    """De-normalized millimeter predictions, written in the generator's
    measurement-CSV format (consumable by its evaluate command)."""
    pred = predict_mm(result, inputs)
    if pred.shape != (len(ids), 16):
        raise ValueError(f"prediction shape {pred.shape} does not match {len(ids)} ids")
    if not np.isfinite(pred).all():
        raise ValueError("non-finite predictions")
    write_predictions_csv(path, ids, pred)
    return pred


def save_checkpoint(result: TrainResult, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "state_dict": result.model.state_dict(),
            "target_stats": result.target_stats.to_dict(),
            "config": result.cfg.__dict__,
        },
        out / "checkpoint.pt",
    )
    (out / "history.json").write_text(json.dumps(result.history, indent=1) + "\n")


def load_checkpoint(path) -> TrainResult:
    blob = torch.load(Path(path) / "checkpoint.pt", weights_only=False)
    cfg = TrainConfig(**blob["config"])
    model = build_model(cfg)
    model.load_state_dict(blob["state_dict"])
    history = json.loads((Path(path) / "history.json").read_text())
    return TrainResult(
        model=model,
        cfg=cfg,
        target_stats=TargetStats.from_dict(blob["target_stats"]),
        history=history,
    )
