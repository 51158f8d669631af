"""Latent class model on binned data, with an EM that selects variables.

Each component is a product of per-variable multinomials over the bins. A
variable outside the relevant set ``omega`` shares one bin distribution across
all components, so it factors out of the mixture sum::

    log f(x_i) = sum_{j not in omega} log(alpha_1jb / l_jb)
               + logsumexp_k [log pi_k + sum_{j in omega} log(alpha_kjb / l_jb)]

The EM maximizes the penalized log-likelihood ``W = loglik - nu * c_n``; its
M-step decides, variable by variable, whether letting the bin distribution
depend on the component pays for the ``(K - 1)(B_j - 1)`` extra parameters.

Internally the bin probabilities of all variables are concatenated into one
``K x sum(B_j)`` matrix so both EM steps are a single matrix product against
the one-hot indicator of the binned data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .binning import BinningScheme, DiscretizedData

EPS_CAP = 1e-6


class DegenerateComponent(RuntimeError):
    """A mixture component lost (numerically) all of its weight."""


def default_epsilon(n: int, n_bins: Iterable[int]) -> float:
    return min(EPS_CAP, 1.0 / (n * max(n_bins)))


def floor_simplex(p: np.ndarray, eps: float) -> np.ndarray:
    """Project rows of ``p`` onto ``{u : u_b >= eps, sum u = 1}``.

    Entries that would fall below ``eps`` are pinned to it and the remaining
    entries are rescaled proportionally. For a row of (normalized) counts this
    is the maximizer of ``sum_b N_b log u_b`` over the floored simplex.
    """
    p = np.asarray(p, dtype=float)
    squeeze = p.ndim == 1
    q = floor_blocks(np.atleast_2d(p), eps, np.array([0]))
    return q[0] if squeeze else q


def floor_blocks(p: np.ndarray, eps: float, offsets: np.ndarray) -> np.ndarray:
    """:func:`floor_simplex` applied to each column block ``[offsets[j], offsets[j+1])``."""
    widths = np.diff(np.append(offsets, p.shape[1]))

    def block_sum(a):
        return np.repeat(np.add.reduceat(a, offsets, axis=1), widths, axis=1)

    low = p < eps
    if not low.any():
        return p / block_sum(p)
    while True:
        free_mass = 1.0 - eps * block_sum(low.astype(float))
        rest = block_sum(np.where(low, 0.0, p))
        q = np.where(low, eps, p * (free_mass / rest))
        grown = low | (q < eps)
        if (grown == low).all():
            return q
        low = grown


def logsumexp_rows(L: np.ndarray) -> np.ndarray:
    m = L.max(axis=1, keepdims=True)
    return m + np.log(np.exp(L - m).sum(axis=1, keepdims=True))


@dataclass(frozen=True)
class LcmParams:
    """Mixture proportions and per-variable bin probabilities.

    ``alpha[j]`` is a ``K x B_j`` matrix. For ``j`` not in ``omega`` every row
    is identical.
    """

    pi: np.ndarray
    alpha: tuple
    omega: tuple
    epsilon: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "pi", np.asarray(self.pi, dtype=float))
        object.__setattr__(self, "alpha", tuple(np.asarray(a, dtype=float) for a in self.alpha))
        object.__setattr__(self, "omega", tuple(sorted(int(j) for j in self.omega)))

    @property
    def K(self) -> int:
        return self.pi.size

    @property
    def J(self) -> int:
        return len(self.alpha)

    @property
    def n_bins(self) -> np.ndarray:
        return np.array([a.shape[1] for a in self.alpha])

    @cached_property
    def alpha_matrix(self) -> np.ndarray:
        """All bin probabilities as one ``K x sum(B_j)`` matrix."""
        return np.hstack(self.alpha)

    def relevant_mask(self) -> np.ndarray:
        mask = np.zeros(self.J, dtype=bool)
        mask[list(self.omega)] = True
        return mask

    def permute_components(self, perm: Sequence[int]) -> "LcmParams":
        perm = np.asarray(perm)
        return LcmParams(self.pi[perm], [a[perm] for a in self.alpha], self.omega, self.epsilon)

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "omega": list(self.omega),
            "pi": self.pi.tolist(),
            "alpha": [a.tolist() for a in self.alpha],
            "epsilon": self.epsilon,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LcmParams":
        return cls(np.asarray(d["pi"]), [np.asarray(a) for a in d["alpha"]], d["omega"], d.get("epsilon", 0.0))


def n_parameters(K: int, omega: Iterable[int], n_bins: Sequence[int]) -> int:
    """Free parameter count ``(K-1) + sum_{omega} K(B_j-1) + sum_{not omega} (B_j-1)``."""
    omega = set(int(j) for j in omega)
    nu = K - 1
    for j, B in enumerate(n_bins):
        nu += (K if j in omega else 1) * (int(B) - 1)
    return nu


def _check_shapes(params: LcmParams, scheme: BinningScheme) -> None:
    if list(params.n_bins) != list(scheme.n_bins):
        raise ValueError("parameter shapes do not match the binning scheme")


def log_density(params: LcmParams, scheme: BinningScheme, row: Sequence[int]) -> float:
    """``log f(x)`` for one discretized observation (bin index per variable)."""
    _check_shapes(params, scheme)
    flat = np.asarray(row, dtype=int) + scheme.offsets
    terms = np.log(params.alpha_matrix[:, flat]) - scheme.log_widths[flat]
    rel = params.relevant_mask()
    inside = np.log(params.pi) + terms[:, rel].sum(axis=1)
    return float(terms[0, ~rel].sum() + logsumexp_rows(inside[None, :])[0, 0])


def _top_three(delta: np.ndarray) -> np.ndarray:
    """Indices of the three largest gains; near-ties (rounding noise) go to the lower index."""
    scale = 1e-9 * max(1.0, float(np.max(np.abs(delta))))
    key = np.round(delta / scale)
    return np.argsort(-key, kind="stable")[:3]


class _Workspace:
    """Per-dataset constants shared by every EM step.

    Responsibilities are held component-major (``K x n``) inside the EM loop;
    reductions over components are then contiguous.
    """

    def __init__(self, data: DiscretizedData, epsilon: float | None = None):
        scheme = data.scheme
        self.n = data.n
        self.J = data.J
        self.B = scheme.n_bins
        self.offsets = scheme.offsets
        self.X = data.indicator
        self.dense = isinstance(self.X, np.ndarray)
        self.XT = np.ascontiguousarray(self.X.T) if self.dense else self.X.T.tocsr()
        self.bin_counts = data.bin_counts
        self.alpha_bar = self.bin_counts / self.n
        self.log_widths = scheme.log_widths
        self.eps = default_epsilon(self.n, self.B) if epsilon is None else epsilon
        self.bar_floored = floor_blocks(self.alpha_bar[None, :], self.eps, self.offsets)[0]

    def bin_mask(self, relevant: np.ndarray) -> np.ndarray:
        return np.repeat(relevant, self.B)

    def e_step(self, A: np.ndarray, pi: np.ndarray, rel_bins: np.ndarray):
        """Responsibilities (``K x n``) and log-likelihood for concatenated ``A``."""
        log_a = np.log(A)
        M = log_a * rel_bins
        L = M @ self.XT if self.dense else (self.X @ M.T).T
        L += np.log(pi)[:, None]
        m = L.max(axis=0)
        E = np.exp(L - m)
        s = E.sum(axis=0)
        outside = self.bin_counts @ (np.where(rel_bins, 0.0, log_a[0]) - self.log_widths)
        return E / s, float(outside + m.sum() + np.log(s).sum())

    def m_step(self, tT, c_n, force_min_three=True, fixed_omega=None):
        K, n = tT.shape
        n_k = tT.sum(axis=1)
        if np.any(n_k < K * np.finfo(float).eps):
            raise DegenerateComponent(f"component weights {n_k} collapsed")
        counts = tT @ self.X if self.dense else (self.XT @ tT.T).T  # K x sum(B)
        alpha_tilde = counts / n_k[:, None]

        # 0 * log 0 = 0: empty cells contribute nothing
        with np.errstate(divide="ignore", invalid="ignore"):
            cell = counts * np.log(alpha_tilde / self.alpha_bar)
        cell[counts <= 0] = 0.0
        delta = np.add.reduceat(cell.sum(axis=0), self.offsets) - (K - 1) * (self.B - 1) * c_n

        relevant = np.zeros(self.J, dtype=bool)
        if K > 1:
            if fixed_omega is not None:
                relevant[list(fixed_omega)] = True
            else:
                relevant = delta > 0
                if force_min_three and relevant.sum() < 3:
                    relevant = np.zeros(self.J, dtype=bool)
                    relevant[_top_three(delta)] = True

        pi = floor_simplex(n_k / n, self.eps)
        rel_bins = self.bin_mask(relevant)
        if relevant.any():
            A = np.where(rel_bins, floor_blocks(alpha_tilde, self.eps, self.offsets), self.bar_floored)
        else:
            A = np.repeat(self.bar_floored[None, :], K, axis=0)
        return A, pi, relevant, delta

    def params(self, A, pi, relevant) -> LcmParams:
        return LcmParams(pi, np.split(A, self.offsets[1:], axis=1), np.flatnonzero(relevant), self.eps)


def log_densities(params: LcmParams, data: DiscretizedData) -> np.ndarray:
    """``log f(x_i)`` for every row."""
    _check_shapes(params, data.scheme)
    log_a = np.log(params.alpha_matrix)
    rel_bins = np.repeat(params.relevant_mask(), data.scheme.n_bins)
    L = data.indicator @ (log_a * rel_bins).T + np.log(params.pi)
    outside = data.indicator @ (np.where(rel_bins, 0.0, log_a[0]) - data.scheme.log_widths)
    return outside + logsumexp_rows(L)[:, 0]


def loglik(params: LcmParams, data: DiscretizedData) -> float:
    return float(log_densities(params, data).sum())


def e_step(params: LcmParams, data: DiscretizedData) -> np.ndarray:
    """Responsibilities ``t_ik``; widths and irrelevant variables cancel out."""
    _check_shapes(params, data.scheme)
    ws = _Workspace(data, params.epsilon or None)
    tT, _ = ws.e_step(params.alpha_matrix, params.pi, ws.bin_mask(params.relevant_mask()))
    return tT.T


def m_step(
    posterior: np.ndarray,
    data: DiscretizedData,
    c_n: float,
    *,
    force_min_three: bool = True,
    fixed_omega: Iterable[int] | None = None,
    epsilon: float | None = None,
) -> tuple[LcmParams, np.ndarray]:
    """Update proportions, bin probabilities, and the relevant set.

    Returns the new parameters and the per-variable gains ``delta``;
    ``delta[j] > 0`` means the penalized expected complete-data log-likelihood
    is higher with ``j`` relevant. When fewer than three gains are positive
    (and ``K >= 2``) the three largest are kept. With ``fixed_omega`` the
    relevant set is pinned and ``delta`` is only reported.
    """
    ws = _Workspace(data, epsilon)
    A, pi, relevant, delta = ws.m_step(
        np.asarray(posterior, dtype=float).T, c_n, force_min_three, fixed_omega
    )
    return ws.params(A, pi, relevant), delta


@dataclass
class FitResult:
    params: LcmParams
    loglik: float
    nu: int
    c_n: float
    posterior: np.ndarray
    iterations: int
    converged: bool
    seed: int | None = None
    trace: list = field(default_factory=list)
    delta: np.ndarray | None = None

    @property
    def K(self) -> int:
        return self.params.K

    @property
    def omega(self) -> tuple:
        return self.params.omega

    @property
    def penalty(self) -> float:
        return self.nu * self.c_n

    @property
    def criterion(self) -> float:
        return self.loglik - self.penalty

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "omega": list(self.omega),
            "pi": self.params.pi.tolist(),
            "alpha": [a.tolist() for a in self.params.alpha],
            "epsilon": self.params.epsilon,
            "loglik": self.loglik,
            "nu": self.nu,
            "c_n": self.c_n,
            "penalty": self.penalty,
            "criterion": self.criterion,
            "iterations": self.iterations,
            "converged": self.converged,
            "seed": self.seed,
        }


def _initial_posterior(K: int, data: DiscretizedData, init: str, rng: np.random.Generator) -> np.ndarray:
    n = data.n
    if K == 1:
        return np.ones((n, 1))
    if init == "random":
        return rng.dirichlet(np.ones(K), size=n)
    if init == "rows":
        # hard-assign each row to the most similar of K random seed rows
        seeds = rng.choice(n, size=K, replace=False)
        agree = (data.codes[:, None, :] == data.codes[seeds][None, :, :]).sum(axis=2)
        noisy = agree + rng.uniform(0.0, 0.5, size=agree.shape)
        t = np.zeros((n, K))
        t[np.arange(n), noisy.argmax(axis=1)] = 1.0
        return 0.9 * t + 0.1 / K
    raise ValueError(f"unknown init {init!r}")


def penalized_em(
    K: int,
    data: DiscretizedData,
    c_n: float,
    *,
    seed: int | None = None,
    init: str = "random",
    max_iter: int = 500,
    tol: float = 1e-6,
    epsilon: float | None = None,
    fixed_omega: Iterable[int] | None = None,
    force_min_three: bool = True,
    record: bool = False,
) -> FitResult:
    """Run one EM from a random start for a fixed number of components.

    The first M-step, taken from random responsibilities, treats every
    variable as relevant (or uses ``fixed_omega``). Iteration stops when the
    penalized log-likelihood moves by less than ``tol``. With ``record`` the
    trace holds ``(W, params, posterior)`` per iteration instead of ``W``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    ws = _Workspace(data, epsilon)
    if fixed_omega is not None:
        fixed_omega = sorted(set(int(j) for j in fixed_omega))
    pinned = range(data.J) if fixed_omega is None else fixed_omega

    t = np.ascontiguousarray(_initial_posterior(K, data, init, rng).T)
    A, pi, relevant, delta = ws.m_step(t, c_n, fixed_omega=pinned)
    t, ll = ws.e_step(A, pi, ws.bin_mask(relevant))
    W = ll - n_parameters(K, np.flatnonzero(relevant), ws.B) * c_n
    trace = [(W, ws.params(A, pi, relevant), t.T) if record else W]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        A, pi, relevant, delta = ws.m_step(t, c_n, force_min_three, fixed_omega)
        t, ll = ws.e_step(A, pi, ws.bin_mask(relevant))
        W_new = ll - n_parameters(K, np.flatnonzero(relevant), ws.B) * c_n
        trace.append((W_new, ws.params(A, pi, relevant), t.T) if record else W_new)
        if abs(W_new - W) < tol:
            converged = True
            break
        W = W_new
    params = ws.params(A, pi, relevant)
    nu = n_parameters(K, params.omega, ws.B)
    return FitResult(params, ll, nu, c_n, np.ascontiguousarray(t.T), it, converged, seed, trace, delta)
