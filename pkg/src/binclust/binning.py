"""Quantile (or equal-width) discretization of each variable.

Bin ``b`` of a continuous variable covers ``(c_{b-1}, c_b]``, with the first
bin closed at the support minimum. Interior cut points sit at order-statistic
quantiles ``x_(ceil(n b / B))``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .data import Categorical, Dataset


DENSE_INDICATOR_LIMIT = 4_000_000


class BinningError(ValueError):
    pass


class BinMergeWarning(UserWarning):
    """Ties forced a variable below two effective bins."""


def default_bin_count(n: int, rate: int) -> int:
    """Closest integer to ``n ** (1 / rate)``, rounding halves up, at least 2."""
    if n < 2 or rate < 1:
        raise ValueError(f"need n >= 2 and rate >= 1, got n={n}, rate={rate}")
    return max(2, int(np.floor(n ** (1.0 / rate) + 0.5)))


@dataclass(frozen=True)
class VariableBins:
    """Bin layout of a single variable.

    ``breakpoints`` is empty for categorical variables, whose bins are the
    levels themselves with unit width.
    """

    n_bins: int
    breakpoints: np.ndarray
    support: tuple[float, float]
    widths: np.ndarray
    categorical: bool = False

    def to_dict(self) -> dict:
        return {
            "n_bins": self.n_bins,
            "breakpoints": self.breakpoints.tolist(),
            "support": list(self.support),
            "widths": self.widths.tolist(),
            "categorical": self.categorical,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VariableBins":
        return cls(
            n_bins=int(d["n_bins"]),
            breakpoints=np.asarray(d["breakpoints"], dtype=float),
            support=(float(d["support"][0]), float(d["support"][1])),
            widths=np.asarray(d["widths"], dtype=float),
            categorical=bool(d["categorical"]),
        )


@dataclass(frozen=True)
class BinningScheme:
    variables: tuple[VariableBins, ...]
    mode: str = "quantile"

    @property
    def J(self) -> int:
        return len(self.variables)

    @property
    def n_bins(self) -> np.ndarray:
        return np.array([v.n_bins for v in self.variables], dtype=int)

    @property
    def offsets(self) -> np.ndarray:
        """Start of each variable's block in the concatenated bin axis."""
        return np.concatenate([[0], np.cumsum(self.n_bins)[:-1]]).astype(int)

    @property
    def log_widths(self) -> np.ndarray:
        """Concatenated ``log l_jb`` over all variables."""
        return np.log(np.concatenate([v.widths for v in self.variables]))

    def to_dict(self) -> dict:
        return {"mode": self.mode, "variables": [v.to_dict() for v in self.variables]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "BinningScheme":
        return cls(tuple(VariableBins.from_dict(v) for v in d["variables"]), d.get("mode", "quantile"))

    @classmethod
    def from_json(cls, text: str) -> "BinningScheme":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class DiscretizedData:
    """Bin index per entry, ``codes[i, j]`` in ``[0, B_j)``."""

    codes: np.ndarray
    scheme: BinningScheme

    @property
    def n(self) -> int:
        return self.codes.shape[0]

    @property
    def J(self) -> int:
        return self.codes.shape[1]

    def flat_codes(self) -> np.ndarray:
        """Codes shifted into the concatenated bin axis."""
        return self.codes + self.scheme.offsets[None, :]

    @cached_property
    def indicator(self):
        """``n x sum(B_j)`` one-hot matrix; dense when small, CSR otherwise."""
        n, J = self.codes.shape
        total = int(self.scheme.n_bins.sum())
        rows = np.repeat(np.arange(n), J)
        cols = self.flat_codes().ravel()
        if n * total <= DENSE_INDICATOR_LIMIT:
            out = np.zeros((n, total))
            out[rows, cols] = 1.0
            return out
        from scipy import sparse

        return sparse.csr_matrix((np.ones(n * J), (rows, cols)), shape=(n, total))

    @cached_property
    def bin_counts(self) -> np.ndarray:
        """Observations per bin on the concatenated bin axis."""
        return np.bincount(self.flat_codes().ravel(), minlength=int(self.scheme.n_bins.sum())).astype(float)


def _quantile_cuts(col: np.ndarray, B: int) -> np.ndarray:
    xs = np.sort(col)
    n = xs.size
    ranks = [-(-n * b // B) for b in range(1, B)]  # ceil(n b / B), 1-based
    cuts = np.unique(xs[np.asarray(ranks, dtype=int) - 1]) if ranks else np.empty(0)
    lo, hi = xs[0], xs[-1]
    # A cut at the maximum would leave an empty zero-width top bin.
    cuts = cuts[cuts < hi]
    if cuts.size and cuts[0] == lo:
        # A cut at the minimum isolates the observations tied at the minimum in a
        # zero-width bin; move it halfway to the next distinct value, which keeps
        # every observation in the same bin and gives the bin positive width.
        nxt = xs[xs > lo][0]
        cuts = cuts.copy()
        cuts[0] = lo + 0.5 * (nxt - lo)
    return cuts


def _continuous_bins(col: np.ndarray, B: int, mode: str, name: str) -> VariableBins:
    lo, hi = float(col.min()), float(col.max())
    if lo == hi:
        raise BinningError(f"column {name!r} is constant; cannot build bins")
    if mode == "quantile":
        cuts = _quantile_cuts(col, B)
    elif mode == "equal-width":
        cuts = lo + (hi - lo) * np.arange(1, B) / B
        cuts = np.unique(cuts[(cuts > lo) & (cuts < hi)])
    else:
        raise ValueError(f"unknown binning mode {mode!r}")
    if cuts.size + 1 < 2:
        warnings.warn(f"column {name!r}: only one bin after merging ties", BinMergeWarning, stacklevel=3)
    edges = np.concatenate([[lo], cuts, [hi]])
    return VariableBins(cuts.size + 1, cuts, (lo, hi), np.diff(edges))


def build_scheme(
    dataset: Dataset, B: int | Sequence[int], mode: str = "quantile"
) -> BinningScheme:
    """Build per-variable bins from a dataset.

    Parameters
    ----------
    dataset : Dataset
    B : int or sequence of int
        Requested bin count, shared or per variable. Ignored for categorical
        variables, which keep one bin per level.
    mode : {"quantile", "equal-width"}
    """
    Bs = [B] * dataset.J if np.isscalar(B) else list(B)
    if len(Bs) != dataset.J:
        raise BinningError(f"{len(Bs)} bin counts given for {dataset.J} variables")
    out = []
    for j, (kind, Bj) in enumerate(zip(dataset.kinds, Bs)):
        if isinstance(kind, Categorical):
            L = kind.levels
            out.append(VariableBins(L, np.empty(0), (0.0, float(L - 1)), np.ones(L), categorical=True))
            continue
        if int(Bj) < 2:
            raise BinningError(f"bin count must be >= 2, got {Bj}")
        out.append(_continuous_bins(dataset.column(j), int(Bj), mode, dataset.names[j]))
    return BinningScheme(tuple(out), mode)


def build_quantile_scheme(dataset: Dataset, B: int | Sequence[int]) -> BinningScheme:
    return build_scheme(dataset, B, "quantile")


def discretize(dataset: Dataset, scheme: BinningScheme) -> DiscretizedData:
    """Map each entry to its bin index.

    Values outside the recorded support land in the nearest edge bin.
    """
    if dataset.J != scheme.J:
        raise BinningError(f"scheme has {scheme.J} variables, dataset has {dataset.J}")
    codes = np.empty((dataset.n, dataset.J), dtype=np.intp)
    for j, vb in enumerate(scheme.variables):
        if vb.categorical != (not dataset.is_continuous(j)):
            raise BinningError(f"variable {j}: kind does not match scheme")
        col = dataset.column(j)
        if vb.categorical:
            if col.max() >= vb.n_bins:
                raise BinningError(f"variable {j}: level code outside scheme")
            codes[:, j] = col.astype(np.intp)
        else:
            codes[:, j] = np.searchsorted(vb.breakpoints, col, side="left")
    codes.setflags(write=False)
    return DiscretizedData(codes, scheme)
