"""Clustering and variable-selection scores used to evaluate simulations."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    """Contingency table between two partitions, with its margins."""

    table: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    n: int

    @classmethod
    def from_labels(cls, labels_a, labels_b) -> "ConfusionCounts":
        a = np.asarray(labels_a).ravel()
        b = np.asarray(labels_b).ravel()
        if a.size != b.size:
            raise ValueError(f"label vectors differ in length: {a.size} vs {b.size}")
        _, ia = np.unique(a, return_inverse=True)
        _, ib = np.unique(b, return_inverse=True)
        table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64) if a.size else np.zeros((0, 0), int)
        np.add.at(table, (ia, ib), 1)
        return cls(table, table.sum(axis=1), table.sum(axis=0), int(a.size))


def _pairs(counts: Iterable[int]) -> int:
    return sum(math.comb(int(c), 2) for c in counts)


def ari(labels_a, labels_b) -> float:
    """Hubert-Arabie adjusted Rand index.

    Pair counts are exact integers, so the result is symmetric and invariant
    to relabeling on either side. When both partitions consist of a single
    cluster the index is undefined (0/0); it is reported as 1.
    """
    cc = ConfusionCounts.from_labels(labels_a, labels_b)
    if cc.n < 2:
        raise ValueError("ARI needs at least two observations")
    index = _pairs(cc.table.ravel())
    sum_a = _pairs(cc.rows)
    sum_b = _pairs(cc.cols)
    total = math.comb(cc.n, 2)
    expected = sum_a * sum_b / total
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return (index - expected) / (max_index - expected)


def sensitivity(omega_hat: Iterable[int], omega_true: Iterable[int]) -> float:
    """Share of truly relevant variables that were selected."""
    truth = set(omega_true)
    if not truth:
        raise ValueError("sensitivity needs a nonempty true relevant set")
    return len(set(omega_hat) & truth) / len(truth)


def specificity(omega_hat: Iterable[int], omega_true: Iterable[int], J: int) -> float:
    """Share of truly irrelevant variables that were left out."""
    truth = set(omega_true)
    negatives = set(range(J)) - truth
    if not negatives:
        raise ValueError("specificity needs at least one truly irrelevant variable")
    return len(negatives - set(omega_hat)) / len(negatives)


@dataclass(frozen=True)
class SelectionTable:
    """Empirical probability of each selected ``K``, plus true/over rates."""

    probabilities: dict
    true_rate: float | None
    over_rate: float | None
    replicates: int

    def to_dict(self) -> dict:
        out = {
            "replicates": self.replicates,
            "probabilities": {str(k): p for k, p in self.probabilities.items()},
        }
        if self.true_rate is not None:
            out["Tr"] = self.true_rate
            out["Ov"] = self.over_rate
        return out

    def format(self) -> str:
        keys = list(self.probabilities)
        head = "  ".join(f"{'K=' + str(k):>6}" for k in keys)
        vals = "  ".join(f"{self.probabilities[k]:>6.3f}" for k in keys)
        if self.true_rate is not None:
            head += f"  {'Tr.':>6}  {'Ov.':>6}"
            vals += f"  {self.true_rate:>6.3f}  {self.over_rate:>6.3f}"
        return head + "\n" + vals


def selection_table(selected_k: Sequence[int], kmax: int, k_true: int | None = None) -> SelectionTable:
    """Frequencies of ``K = 1..kmax`` among replicate selections.

    Every ``K`` in range is listed even if never chosen. Values are rounded to
    three decimals.
    """
    selected_k = [int(k) for k in selected_k]
    if not selected_k:
        raise ValueError("selection table needs at least one replicate")
    counts = Counter(selected_k)
    R = len(selected_k)
    probs = {k: round(counts.get(k, 0) / R, 3) for k in range(1, kmax + 1)}
    tr = ov = None
    if k_true is not None:
        tr = round(counts.get(k_true, 0) / R, 3)
        ov = round(sum(c for k, c in counts.items() if k > k_true) / R, 3)
    return SelectionTable(probs, tr, ov, R)
