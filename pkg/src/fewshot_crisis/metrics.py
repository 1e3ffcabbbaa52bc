"""Confusion counts, precision/recall/F1 and multi-seed aggregation."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

METRICS = ("precision", "recall", "f1", "accuracy")
RESULT_HEADER = ("head", "regime", "k", "seed") + METRICS
# expected run-to-run spread at full scale; exceeding it only warns
SEED_STD_WARN = 0.02


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @classmethod
    def from_predictions(cls, y_true: Iterable[bool], y_pred: Iterable[bool]) -> "Confusion":
        t = np.asarray(list(y_true), dtype=bool)
        p = np.asarray(list(y_pred), dtype=bool)
        if t.shape != p.shape:
            raise ValueError("label and prediction counts differ")
        return cls(int((t & p).sum()), int((~t & p).sum()), int((t & ~p).sum()), int((~t & ~p).sum()))

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n if self.n else 0.0

    def as_dict(self) -> dict[str, float]:
        return {m: getattr(self, m) for m in METRICS}


@dataclass(frozen=True)
class SeedRow:
    seed: int
    confusion: Confusion

    def __getattr__(self, name):
        if name in METRICS:
            return getattr(self.confusion, name)
        raise AttributeError(name)


@dataclass
class MetricReport:
    """Per-seed metric rows for one (head, regime, k) configuration."""

    head: str
    regime: str
    k: int
    fingerprint: str
    rows: list[SeedRow] = field(default_factory=list)

    def values(self, metric: str) -> np.ndarray:
        return np.array([getattr(r.confusion, metric) for r in self.rows], dtype=np.float64)

    def mean(self, metric: str) -> float:
        return float(self.values(metric).mean())

    def std(self, metric: str) -> float:
        """Population standard deviation across seeds."""
        return float(self.values(metric).std())

    def summary(self) -> dict[str, float]:
        out = {}
        for m in METRICS:
            out[f"{m}_mean"] = self.mean(m)
            out[f"{m}_std"] = self.std(m)
        return out


def aggregate_seeds(reports: Sequence[MetricReport]) -> MetricReport:
    if not reports:
        raise ValueError("nothing to aggregate")
    first = reports[0]
    for r in reports[1:]:
        if r.fingerprint != first.fingerprint:
            raise ValueError(f"config fingerprint mismatch: {first.fingerprint} vs {r.fingerprint}")
    rows = [row for r in reports for row in r.rows]
    out = MetricReport(first.head, first.regime, first.k, first.fingerprint, rows)
    if len(rows) > 1 and out.std("f1") > SEED_STD_WARN:
        log.warning(
            "%s k=%d: F1 std across seeds %.3f exceeds %.2f", first.head, first.k, out.std("f1"), SEED_STD_WARN
        )
    return out


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def write_results_csv(reports: Iterable[MetricReport], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_HEADER)
        for rep in reports:
            for row in rep.rows:
                w.writerow([rep.head, rep.regime, rep.k, row.seed] + [_fmt(getattr(row.confusion, m)) for m in METRICS])


AGGREGATE_HEADER = ("head", "regime", "k", "n_seeds") + tuple(f"{m}_{s}" for m in METRICS for s in ("mean", "std"))


def write_aggregate_csv(reports: Iterable[MetricReport], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_HEADER)
        for rep in reports:
            s = rep.summary()
            w.writerow([rep.head, rep.regime, rep.k, len(rep.rows)] + [_fmt(s[h]) for h in AGGREGATE_HEADER[4:]])
