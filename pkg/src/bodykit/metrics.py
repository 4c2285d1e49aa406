"""Evaluation of predicted vs ground-truth measurement sets.

Three metrics: per-measurement MAE (mm); AP@t, the percentage of samples
whose error for one measurement is within t mm (inclusive); and mAP@t,
the percentage of samples whose MEAN error across the 16 measurements is
within t mm. mAP is not the average of the AP rows and no relation
between them is assumed.

Published accuracies of the source experiments are kept as reference
constants for report footers. They were obtained with 100k samples and
300 GPU epochs and are not reproduction targets for desk-scale runs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IdMismatch, MissingFold
from .measure import MEASUREMENT_NAMES

DEFAULT_THRESHOLDS = (10.0, 20.0)

# Mean-row MAE values of the published result tables, millimeters.
PUBLISHED_REFERENCE_MAE_MM = {
    "conv_grayscale": 4.64,
    "conv_binary": 7.60,
    "pointcloud_512": 5.29,
    "pointcloud_1024": 4.95,
}


def _align(predictions: dict, truth: dict):
    """Sorted common ids -> (ids, P, T) matrices; ids must match exactly."""
    pids = set(predictions)
    tids = set(truth)
    if pids != tids:
        missing = sorted(tids - pids)[:3]
        extra = sorted(pids - tids)[:3]
        raise IdMismatch(f"prediction ids differ from truth ids (missing {missing}, extra {extra})")
    if not predictions:
        raise IdMismatch("empty prediction set")
    ids = sorted(predictions)

    def mat(rows):
        out = np.empty((len(ids), 16))
        for i, sid in enumerate(ids):
            r = rows[sid]
            out[i] = r.values if hasattr(r, "values") else np.asarray(r, dtype=np.float64)
        return out

    return ids, mat(predictions), mat(truth)


def mae(predictions: dict, truth: dict) -> dict:
    """Per-measurement mean absolute error in millimeters."""
    _, p, t = _align(predictions, truth)
    err = np.abs(p - t).mean(axis=0)
    return {n: float(v) for n, v in zip(MEASUREMENT_NAMES, err)}


def ap_at(predictions: dict, truth: dict, threshold: float) -> dict:
    """Per-measurement percentage of samples with |error| <= threshold."""
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    _, p, t = _align(predictions, truth)
    ok = (np.abs(p - t) <= threshold).mean(axis=0) * 100.0
    return {n: float(v) for n, v in zip(MEASUREMENT_NAMES, ok)}


def map_at(predictions: dict, truth: dict, threshold: float) -> float:
    """Percentage of samples whose 16-measurement mean error <= threshold."""
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    _, p, t = _align(predictions, truth)
    per_sample = np.abs(p - t).mean(axis=1)
    return float((per_sample <= threshold).mean() * 100.0)


@dataclass
class EvalReport:
    fold: str
    n_samples: int
    mae: dict
    ap: dict = field(default_factory=dict)  # threshold -> {measurement: pct}
    map: dict = field(default_factory=dict)  # threshold -> pct

    @property
    def mean_mae(self) -> float:
        return float(np.mean(list(self.mae.values())))


def evaluate(predictions: dict, truth: dict, thresholds=DEFAULT_THRESHOLDS,
             fold: str = "all") -> EvalReport:
    sub_truth = {k: truth[k] for k in predictions} if set(predictions) <= set(truth) else truth
    return EvalReport(
        fold=fold,
        n_samples=len(predictions),
        mae=mae(predictions, sub_truth),
        ap={float(t): ap_at(predictions, sub_truth, t) for t in thresholds},
        map={float(t): map_at(predictions, sub_truth, t) for t in thresholds},
    )


def evaluate_folds(truth: dict, fold_ids: list, predictions_per_fold: dict,
                   thresholds=DEFAULT_THRESHOLDS):
    """Per-fold reports plus the cross-fold mean report.

    fold_ids: list of (fold_name, test ids). predictions_per_fold maps
    fold_name -> {id: values}; every fold must be covered.
    """
    reports = []
    for name, ids in fold_ids:
        if name not in predictions_per_fold:
            raise MissingFold(f"no predictions for fold {name!r}")
        preds = predictions_per_fold[name]
        if set(preds) != set(ids):
            raise IdMismatch(f"fold {name!r}: prediction ids do not match the test fold")
        reports.append(evaluate(preds, {k: truth[k] for k in ids}, thresholds, fold=str(name)))

    agg = EvalReport(
        fold="mean",
        n_samples=sum(r.n_samples for r in reports),
        mae={
            n: float(np.mean([r.mae[n] for r in reports])) for n in MEASUREMENT_NAMES
        },
        ap={
            t: {n: float(np.mean([r.ap[t][n] for r in reports])) for n in MEASUREMENT_NAMES}
            for t in reports[0].ap
        },
        map={t: float(np.mean([r.map[t] for r in reports])) for t in reports[0].map},
    )
    return reports, agg


# ---------------------------------------------------------------------------
# report rendering


def report_text(report: EvalReport, label: str = "") -> str:
    """Aligned text table: 16 measurement rows plus the mean row."""
    thresholds = sorted(report.ap)
    head = f"{'Body measurement':28s} {'MAE (mm)':>10s}"
    for t in thresholds:
        head += f" {'AP@%g (%%)' % t:>12s}"
    lines = []
    if label:
        lines.append(label)
    lines.append(f"fold: {report.fold}   samples: {report.n_samples}")
    lines.append(head)
    lines.append("-" * len(head))
    for n in MEASUREMENT_NAMES:
        row = f"{n.replace('_', ' '):28s} {report.mae[n]:10.2f}"
        for t in thresholds:
            row += f" {report.ap[t][n]:12.2f}"
        lines.append(row)
    lines.append("-" * len(head))
    row = f"{'Mean':28s} {report.mean_mae:10.2f}"
    for t in thresholds:
        row += f" {report.map[t]:12.2f}"
    lines.append(row + "   (mean row AP columns are mAP@t)")
    lines.append("")
    lines.append("Published reference mean MAE (100k samples, 300 epochs; not a")
    lines.append("desk-scale target): " + ", ".join(
        f"{k}={v:.2f} mm" for k, v in PUBLISHED_REFERENCE_MAE_MM.items()
    ))
    return "\n".join(lines)


def report_csv(report: EvalReport) -> str:
    thresholds = sorted(report.ap)
    header = "measurement,mae_mm" + "".join(f",ap{int(t)}_pct" for t in thresholds)
    lines = [header]
    for n in MEASUREMENT_NAMES:
        lines.append(
            f"{n},{report.mae[n]:.3f}" + "".join(f",{report.ap[t][n]:.2f}" for t in thresholds)
        )
    lines.append(
        f"mean,{report.mean_mae:.3f}" + "".join(f",{report.map[t]:.2f}" for t in thresholds)
    )
    return "\n".join(lines) + "\n"
