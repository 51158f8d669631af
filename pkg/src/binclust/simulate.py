"""Simulation designs with known ground truth.

``ShiftDesign``: three equally likely components; component ``k`` shifts
variables ``2k`` and ``2k+1`` (0-based) by ``tau`` and leaves the rest
untouched, so only the first six variables are relevant. Noise is standard
Gaussian, raw Student t with 3 degrees of freedom (variance 3), or Laplace
with unit scale (variance 2).

``KasaharaDesign``: three equally likely 8-variate Gaussian components with
identity covariance and fixed centers.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .data import Dataset
from .seeding import derive_seed, generator

NOISES = ("gaussian", "student", "laplace")
STUDENT_DF = 3

# tau giving a 5% Bayes misclassification rate, per noise law
TAU_5PCT = {"gaussian": 1.94, "student": 2.60, "laplace": 2.52}

KASAHARA_MEANS = np.array(
    [
        [0, 0, 0, 0, 0, 0, 0, 0],
        [1, 2, 0.5, 1, 0.75, 1.25, 0.25, 0.5],
        [2, 1, 1, 0.5, 1.25, 0.75, 0.5, 0.25],
    ]
)


@dataclass(frozen=True)
class ShiftDesign:
    n: int
    J: int = 20
    noise: str = "gaussian"
    tau: float = 1.94
    K: int = 3

    def __post_init__(self):
        if self.J < 6:
            raise ValueError("shift design needs J >= 6")
        if self.noise not in NOISES:
            raise ValueError(f"noise must be one of {NOISES}")
        if self.K != 3:
            raise ValueError("shift design has exactly three components")

    @property
    def omega(self) -> tuple:
        return tuple(range(6))

    def shifts(self) -> np.ndarray:
        delta = np.zeros((3, self.J))
        for k in range(3):
            delta[k, 2 * k : 2 * k + 2] = self.tau
        return delta

    def describe(self) -> dict:
        return {"design": "shift", **asdict(self), "noise_convention": NOISE_CONVENTION[self.noise]}


@dataclass(frozen=True)
class KasaharaDesign:
    n: int
    K: int = 3
    J: int = 8

    @property
    def omega(self) -> tuple:
        return tuple(range(8))

    def describe(self) -> dict:
        return {"design": "kasahara", **asdict(self), "means": KASAHARA_MEANS.tolist()}


NOISE_CONVENTION = {
    "gaussian": "standard normal",
    "student": "raw t(3), unit scale, variance 3",
    "laplace": "unit scale, variance 2",
}


def draw_noise(rng: np.random.Generator, noise: str, size) -> np.ndarray:
    if noise == "gaussian":
        return rng.standard_normal(size)
    if noise == "student":
        return rng.standard_t(STUDENT_DF, size)
    if noise == "laplace":
        return rng.laplace(0.0, 1.0, size)
    raise ValueError(f"unknown noise {noise!r}")


def generate(design, seed: int):
    """Draw one sample.

    Returns ``(dataset, labels, omega)`` where ``labels`` are the true
    component indices and ``omega`` the truly relevant variables.
    """
    rng = generator(seed, 0)
    z = rng.integers(0, design.K, size=design.n)
    if isinstance(design, ShiftDesign):
        X = design.shifts()[z] + draw_noise(rng, design.noise, (design.n, design.J))
    elif isinstance(design, KasaharaDesign):
        X = KASAHARA_MEANS[z] + rng.standard_normal((design.n, design.J))
    else:
        raise TypeError(f"unknown design {design!r}")
    return Dataset.from_array(X), z, design.omega


def _log_noise_pdf(x: np.ndarray, noise: str) -> np.ndarray:
    if noise == "gaussian":
        return -0.5 * x**2
    if noise == "student":
        return -0.5 * (STUDENT_DF + 1) * np.log1p(x**2 / STUDENT_DF)
    if noise == "laplace":
        return -np.abs(x)
    raise ValueError(f"unknown noise {noise!r}")


def bayes_error(noise: str, tau: float, samples: int = 1_000_000, seed: int = 0) -> float:
    """Monte-Carlo misclassification rate of the Bayes rule for the shift design.

    Only the six relevant variables matter. By symmetry it suffices to draw
    from component 0 (shift on variables 0 and 1).
    """
    rng = generator(seed, 1)
    xi = draw_noise(rng, noise, (samples, 6))
    return _bayes_error_from_noise(xi, noise, tau)


def _bayes_error_from_noise(xi: np.ndarray, noise: str, tau: float) -> float:
    x = xi.copy()
    x[:, :2] += tau
    gain = _log_noise_pdf(x - tau, noise) - _log_noise_pdf(x, noise)
    scores = gain.reshape(-1, 3, 2).sum(axis=2)  # log-likelihood ratio per component
    best_other = np.maximum(scores[:, 1], scores[:, 2])
    # ties split evenly; they have probability zero for continuous noise
    return float(np.mean(best_other > scores[:, 0]) + 0.5 * np.mean(best_other == scores[:, 0]))


def tau_for_error(
    noise: str, target: float = 0.05, *, method: str = "lookup", samples: int = 1_000_000, seed: int = 0
) -> float:
    """Shift size giving a target Bayes misclassification rate.

    ``lookup`` returns the published values for a 5% rate and falls back to the
    numeric solver otherwise. ``numeric`` bisects on ``tau`` with common random
    numbers, so the Monte-Carlo error curve is monotone.
    """
    if not 0.0 < target < 0.5:
        raise ValueError("target error must lie in (0, 0.5)")
    if noise not in NOISES:
        raise ValueError(f"noise must be one of {NOISES}")
    if method == "lookup" and target == 0.05:
        return TAU_5PCT[noise]
    if method not in ("lookup", "numeric"):
        raise ValueError(f"unknown method {method!r}")
    xi = draw_noise(generator(seed, 1), noise, (samples, 6))
    lo, hi = 0.0, 1.0
    while _bayes_error_from_noise(xi, noise, hi) > target:
        hi *= 2.0
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if _bayes_error_from_noise(xi, noise, mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def replicate_seed(master: int, replicate: int) -> int:
    return derive_seed(master, replicate)
