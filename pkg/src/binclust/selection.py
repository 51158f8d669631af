"""Model search over the number of components and the relevant variables.

For each ``K`` in ``1..kmax`` the penalized EM is restarted from several
seeded random starts and the best run kept; the selected model maximizes the
penalized log-likelihood over ``K``. All ``K`` share one binning scheme, built
from the full dataset.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .binning import BinningScheme, DiscretizedData, build_scheme, default_bin_count, discretize
from .data import Dataset
from .lcm import DegenerateComponent, FitResult, n_parameters, penalized_em
from .seeding import derive_seed

DEFAULT_RESTARTS = 20


@dataclass(frozen=True)
class PenaltyRule:
    """Penalty unit ``c_n``: BIC uses ``log(n)/2``, AIC uses 1."""

    kind: str = "bic"
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("bic", "aic", "custom"):
            raise ValueError(f"unknown penalty {self.kind!r}")
        if self.kind == "custom" and (self.value is None or self.value < 0):
            raise ValueError("custom penalty needs c_n >= 0")

    def c_n(self, n: int) -> float:
        if self.kind == "bic":
            return math.log(n) / 2
        if self.kind == "aic":
            return 1.0
        return float(self.value)

    @classmethod
    def parse(cls, text: str) -> "PenaltyRule":
        """``bic``, ``aic`` or ``c=<float>``."""
        text = text.strip().lower()
        if text in ("bic", "aic"):
            return cls(text)
        if text.startswith("c="):
            return cls("custom", float(text[2:]))
        raise ValueError(f"cannot parse penalty {text!r}")

    def __str__(self) -> str:
        return f"c={self.value:g}" if self.kind == "custom" else self.kind


BIC = PenaltyRule("bic")
AIC = PenaltyRule("aic")


def penalty_value(rule: PenaltyRule, n: int, K: int, omega: Iterable[int], scheme: BinningScheme) -> float:
    return n_parameters(K, omega, scheme.n_bins) * rule.c_n(n)


@dataclass(frozen=True)
class BinsConfig:
    """Either a fixed bin count or the rate ``s`` in ``B = [n ** (1/s)]``."""

    bins: int | None = None
    rate: int = 6
    mode: str = "quantile"

    def resolve(self, n: int) -> int:
        return self.bins if self.bins is not None else default_bin_count(n, self.rate)

    def to_dict(self) -> dict:
        return {"bins": self.bins, "rate": self.rate, "mode": self.mode}


@dataclass
class SelectionResult:
    per_k: dict
    best_k: int
    scheme: BinningScheme
    settings: dict = field(default_factory=dict)

    @property
    def best(self) -> FitResult:
        return self.per_k[self.best_k]

    def to_dict(self) -> dict:
        return {
            "best_k": self.best_k,
            "best": self.best.to_dict(),
            "per_k": {
                str(K): (fit.to_dict() if fit is not None else None) for K, fit in sorted(self.per_k.items())
            },
            "scheme": self.scheme.to_dict(),
            "settings": self.settings,
        }

    def summary(self) -> str:
        lines = [f"{'K':>3} {'loglik':>14} {'nu':>6} {'penalty':>12} {'W':>14}  omega"]
        for K, fit in sorted(self.per_k.items()):
            mark = "*" if K == self.best_k else " "
            if fit is None:
                lines.append(f"{K:>3} {'failed':>14}")
                continue
            lines.append(
                f"{K:>3} {fit.loglik:>14.4f} {fit.nu:>6d} {fit.penalty:>12.4f} "
                f"{fit.criterion:>14.4f}{mark} {','.join(map(str, fit.omega)) or '-'}"
            )
        return "\n".join(lines)


def _better(a: FitResult, b: FitResult | None) -> bool:
    """Is ``a`` preferred to ``b``: higher W, then smaller K, then smaller omega."""
    if b is None:
        return True
    if a.criterion != b.criterion:
        return a.criterion > b.criterion
    if a.K != b.K:
        return a.K < b.K
    return (len(a.omega), a.omega) < (len(b.omega), b.omega)


def _run_restart(args) -> FitResult | None:
    data, K, c_n, seed, fixed_omega, em_kwargs = args
    try:
        return penalized_em(K, data, c_n, seed=seed, fixed_omega=fixed_omega, **em_kwargs)
    except DegenerateComponent:
        return None


def _best_fits(data, Ks, c_n, restarts, seed, fixed_omega, em_kwargs, jobs) -> dict:
    tasks = []
    for K in Ks:
        pinned = fixed_omega if (fixed_omega is not None and K > 1) else None
        for r in range(restarts):
            tasks.append((data, K, c_n, derive_seed(seed, K, r), pinned, em_kwargs))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            fits = list(pool.map(_run_restart, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        fits = [_run_restart(task) for task in tasks]

    best: dict = {K: None for K in Ks}
    for task, fit in zip(tasks, fits):
        if fit is not None and _better(fit, best[task[1]]):
            best[task[1]] = fit
    for K, fit in best.items():
        if fit is None:
            warnings.warn(f"all {restarts} restarts degenerate for K={K}; excluded", RuntimeWarning, stacklevel=3)
    return best


def fit_k(
    data: DiscretizedData,
    K: int,
    rule: PenaltyRule = BIC,
    *,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    fixed_omega: Sequence[int] | None = None,
    jobs: int = 1,
    **em_kwargs,
) -> FitResult | None:
    """Best of ``restarts`` EM runs for one ``K``; ``None`` if all degenerate."""
    return _best_fits(data, [K], rule.c_n(data.n), restarts, seed, fixed_omega, em_kwargs, jobs)[K]


def _select(dataset, kmax, rule, bins, restarts, seed, jobs, pin_all, em_kwargs) -> SelectionResult:
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if kmax >= 2 and dataset.J < 3:
        raise ValueError("at least three variables are needed to fit K >= 2 components")
    bins = bins or BinsConfig()
    scheme = build_scheme(dataset, bins.resolve(dataset.n), bins.mode)
    data = discretize(dataset, scheme)
    fixed = list(range(dataset.J)) if pin_all else None
    per_k = _best_fits(data, range(1, kmax + 1), rule.c_n(dataset.n), restarts, seed, fixed, em_kwargs, jobs)
    ok = {K: fit for K, fit in per_k.items() if fit is not None}
    if not ok:
        raise DegenerateComponent("every K failed")
    best = None
    for fit in ok.values():
        if _better(fit, best):
            best = fit
    settings = {
        "kmax": kmax,
        "penalty": str(rule),
        "c_n": rule.c_n(dataset.n),
        "bins": bins.to_dict(),
        "restarts": restarts,
        "seed": seed,
        "fixed_omega": pin_all,
        **{k: v for k, v in em_kwargs.items()},
    }
    return SelectionResult(per_k, best.K, scheme, settings)


def select_full(
    dataset: Dataset,
    kmax: int,
    rule: PenaltyRule = BIC,
    bins: BinsConfig | None = None,
    *,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    jobs: int = 1,
    **em_kwargs,
) -> SelectionResult:
    """Select the number of components and the relevant variables jointly."""
    return _select(dataset, kmax, rule, bins, restarts, seed, jobs, False, em_kwargs)


def select_k_only(
    dataset: Dataset,
    kmax: int,
    rule: PenaltyRule = BIC,
    bins: BinsConfig | None = None,
    *,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    jobs: int = 1,
    **em_kwargs,
) -> SelectionResult:
    """Select the number of components with every variable treated as relevant."""
    return _select(dataset, kmax, rule, bins, restarts, seed, jobs, True, em_kwargs)


def recompute_criterion(fit: FitResult, data: DiscretizedData) -> float:
    """W recomputed from the stored parameters alone."""
    from .lcm import loglik

    return loglik(fit.params, data) - n_parameters(fit.K, fit.omega, data.scheme.n_bins) * fit.c_n
