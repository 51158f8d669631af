"""Deliverables computed from a fitted model.

Besides the MAP partition, two density estimates per (component, variable)
are offered: the piecewise-constant bin density ``alpha_kjb / l_jb`` and a
kernel refinement. The refinement alternates weighted Gaussian-kernel density
estimates with posterior updates, starting from the binned fit. It is a
simplified stand-in for maximizing a smoothed log-likelihood, not a
reproduction of that algorithm.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .binning import BinningScheme
from .data import Dataset, column_sd
from .lcm import FitResult

KERNEL = "gaussian"
DEFAULT_GRID = 512
DEFAULT_SWEEPS = 50
SWEEP_TOL = 1e-6
_TINY = 1e-300


def hard_partition(posterior: np.ndarray) -> np.ndarray:
    """MAP labels; ``np.argmax`` breaks ties toward the smallest component."""
    posterior = np.asarray(posterior)
    if posterior.ndim != 2:
        raise ValueError("posterior must be an n x K matrix")
    return np.argmax(posterior, axis=1)


@dataclass(frozen=True)
class BinDensity:
    """Piecewise-constant density on the bins of a continuous variable."""

    edges: np.ndarray
    values: np.ndarray

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def integral(self) -> float:
        return float(np.sum(self.values * self.widths))

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        idx = np.clip(np.searchsorted(self.edges[1:-1], u, side="left"), 0, self.values.size - 1)
        inside = (u >= self.edges[0]) & (u <= self.edges[-1])
        return np.where(inside, self.values[idx], 0.0)

    def to_dict(self) -> dict:
        return {"type": "bins", "edges": self.edges.tolist(), "density": self.values.tolist()}


@dataclass(frozen=True)
class CategoricalProbabilities:
    """Level probabilities of a categorical variable (no density)."""

    probabilities: np.ndarray
    categorical: bool = True

    def to_dict(self) -> dict:
        return {"type": "categorical", "probabilities": self.probabilities.tolist()}


@dataclass(frozen=True)
class KernelDensity:
    """Kernel density tabulated on a uniform grid."""

    grid: np.ndarray
    values: np.ndarray
    bandwidth: float

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.grid))

    def to_dict(self) -> dict:
        return {
            "type": "kernel",
            "grid": self.grid.tolist(),
            "density": self.values.tolist(),
            "bandwidth": self.bandwidth,
        }


@dataclass
class ComponentDensities:
    """Density estimate for every ``(component, variable)`` pair."""

    K: int
    J: int
    entries: dict
    meta: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.entries[key]

    def records(self, names=None) -> list[dict]:
        out = []
        for (k, j), est in sorted(self.entries.items()):
            rec = {"variable": names[j] if names else j, "variable_index": j, "component": k}
            rec.update(est.to_dict())
            out.append(rec)
        return out

    def to_dict(self, names=None) -> dict:
        return {"K": self.K, "J": self.J, "meta": self.meta, "densities": self.records(names)}


def bin_densities(fit: FitResult, scheme: BinningScheme) -> ComponentDensities:
    """``alpha_kjb / l_jb`` per bin; categorical variables keep raw probabilities."""
    params = fit.params
    if list(params.n_bins) != list(scheme.n_bins):
        raise ValueError("fit and binning scheme disagree on bin counts")
    entries = {}
    for j, vb in enumerate(scheme.variables):
        for k in range(params.K):
            a = params.alpha[j][k]
            if vb.categorical:
                entries[k, j] = CategoricalProbabilities(a.copy())
            else:
                edges = np.concatenate([[vb.support[0]], vb.breakpoints, [vb.support[1]]])
                entries[k, j] = BinDensity(edges, a / vb.widths)
    return ComponentDensities(params.K, params.J, entries, {"estimator": "bins"})


def bandwidths(dataset: Dataset) -> np.ndarray:
    """Plug-in bandwidth ``sd_j * n ** (-1/5)``; NaN for categorical columns."""
    h = np.full(dataset.J, np.nan)
    for j in range(dataset.J):
        if dataset.is_continuous(j):
            h[j] = column_sd(dataset, j) * dataset.n ** (-0.2)
    return h


def _gauss(d: np.ndarray, h: float) -> np.ndarray:
    return np.exp(-0.5 * (d / h) ** 2) / (h * np.sqrt(2.0 * np.pi))


def _weighted_kde(x: np.ndarray, weights: np.ndarray, h: float, points: np.ndarray) -> np.ndarray:
    """``sum_i w_ik phi_h(u - x_i) / sum_i w_ik`` at ``points``, one column per component."""
    w = weights / weights.sum(axis=0)
    out = np.empty((points.size, w.shape[1]))
    step = max(1, 4_000_000 // max(1, x.size))
    for s in range(0, points.size, step):
        out[s : s + step] = _gauss(points[s : s + step, None] - x[None, :], h) @ w
    return out


def _grid(x: np.ndarray, h: float, G: int) -> np.ndarray:
    return np.linspace(x.min() - 3 * h, x.max() + 3 * h, G)


def _collapsed(t: np.ndarray) -> bool:
    return bool(np.any(t.sum(axis=0) < t.shape[1] * np.finfo(float).eps))


def kernel_refine(
    fit: FitResult,
    dataset: Dataset,
    scheme: BinningScheme | None = None,
    *,
    grid_size: int = DEFAULT_GRID,
    sweeps: int = DEFAULT_SWEEPS,
    tol: float = SWEEP_TOL,
) -> tuple[ComponentDensities, np.ndarray]:
    """Refine the binned fit with weighted kernel density estimates.

    Each sweep estimates ``f_kj`` by a Gaussian kernel density estimate of
    column ``j`` weighted by ``t_ik``, then sets
    ``t_ik ~ pi_k prod_{j in omega} f_kj(x_ij)`` and ``pi_k = mean_i t_ik``.
    Categorical relevant variables keep the fitted level probabilities.
    Sweeps stop early once the posterior moves by less than ``tol``.

    Returns the densities tabulated on ``grid_size`` points over each
    observed range widened by ``3 h_j``, and the refined posterior. If a
    component loses all weight the binned posterior is returned unchanged,
    together with the bin densities of ``scheme`` (empty when no scheme is
    given), and a warning is issued.
    """
    if dataset.n != fit.posterior.shape[0]:
        raise ValueError("dataset and fit disagree on the number of rows")
    if sweeps < 0 or grid_size < 2:
        raise ValueError("need sweeps >= 0 and grid_size >= 2")
    h = bandwidths(dataset)
    K = fit.K
    omega = list(fit.omega)
    t = np.array(fit.posterior, dtype=float)
    pi = t.mean(axis=0)

    # log-density contributions of categorical relevant variables are fixed
    cat_term = np.zeros((dataset.n, K))
    cont_rel = []
    for j in omega:
        col = dataset.column(j)
        if dataset.is_continuous(j):
            cont_rel.append(j)
        else:
            probs = fit.params.alpha[j]
            cat_term += np.log(probs[:, col.astype(int)].T)

    iterations = 0
    converged = sweeps == 0
    for r in range(sweeps):
        if _collapsed(t):
            break
        logp = np.log(np.maximum(pi, _TINY)) + cat_term
        for j in cont_rel:
            x = dataset.column(j)
            logp += np.log(np.maximum(_weighted_kde(x, t, h[j], x), _TINY))
        logp -= logp.max(axis=1, keepdims=True)
        t_new = np.exp(logp)
        t_new /= t_new.sum(axis=1, keepdims=True)
        change = float(np.max(np.abs(t_new - t)))
        t = t_new
        pi = t.mean(axis=0)
        iterations = r + 1
        if change < tol:
            converged = True
            break

    if _collapsed(t):
        warnings.warn(
            "a component lost all weight during kernel refinement; keeping the binned fit",
            RuntimeWarning,
            stacklevel=2,
        )
        if scheme is not None:
            dens = bin_densities(fit, scheme)
        else:
            dens = ComponentDensities(K, dataset.J, {}, {"estimator": "none"})
        dens.meta["refinement"] = "aborted"
        return dens, np.array(fit.posterior)

    entries = {}
    for j in range(dataset.J):
        x = dataset.column(j)
        if not dataset.is_continuous(j):
            for k in range(K):
                entries[k, j] = CategoricalProbabilities(fit.params.alpha[j][k].copy())
            continue
        grid = _grid(x, h[j], grid_size)
        if j in omega:
            dens = _weighted_kde(x, t, h[j], grid)
        else:
            # an irrelevant variable has one density shared by all components
            dens = np.repeat(_weighted_kde(x, np.ones((x.size, 1)), h[j], grid), K, axis=1)
        for k in range(K):
            entries[k, j] = KernelDensity(grid, dens[:, k], float(h[j]))
    meta = {
        "estimator": "kernel",
        "kernel": KERNEL,
        "bandwidth_rule": "sd * n^(-1/5)",
        "grid_size": grid_size,
        "sweeps": iterations,
        "converged": converged,
        "pi": pi.tolist(),
    }
    return ComponentDensities(K, dataset.J, entries, meta), t
