"""Builders for small random model instances."""

from __future__ import annotations

import numpy as np

from binclust.binning import BinningScheme, DiscretizedData, VariableBins
from binclust.lcm import LcmParams


def random_scheme(rng, n_bins) -> BinningScheme:
    variables = []
    for B in n_bins:
        widths = rng.uniform(0.2, 2.0, size=B)
        edges = np.concatenate([[0.0], np.cumsum(widths)])
        variables.append(VariableBins(int(B), edges[1:-1], (0.0, float(edges[-1])), widths))
    return BinningScheme(tuple(variables))


def random_params(rng, K, scheme, omega) -> LcmParams:
    pi = rng.dirichlet(np.ones(K))
    alpha = []
    for j, B in enumerate(scheme.n_bins):
        if j in omega:
            alpha.append(rng.dirichlet(np.ones(B), size=K))
        else:
            alpha.append(np.repeat(rng.dirichlet(np.ones(B))[None, :], K, axis=0))
    return LcmParams(pi, alpha, omega)


def random_data(rng, n, scheme) -> DiscretizedData:
    codes = np.column_stack([rng.integers(0, B, size=n) for B in scheme.n_bins])
    return DiscretizedData(codes, scheme)


def nested(params: LcmParams, scheme: BinningScheme):
    """Plain nested lists for the oracles."""
    alpha = [a.tolist() for a in params.alpha]
    widths = [v.widths.tolist() for v in scheme.variables]
    return params.pi.tolist(), alpha, widths, list(params.omega)


def random_instance(rng, n_max=20, J_max=4, K_max=3, B_max=3):
    J = int(rng.integers(1, J_max + 1))
    K = int(rng.integers(1, K_max + 1))
    n_bins = rng.integers(2, B_max + 1, size=J)
    scheme = random_scheme(rng, n_bins)
    omega = [] if K == 1 else sorted(rng.choice(J, size=int(rng.integers(0, J + 1)), replace=False).tolist())
    params = random_params(rng, K, scheme, omega)
    data = random_data(rng, int(rng.integers(1, n_max + 1)), scheme)
    return scheme, params, data


def permute_bins(data: DiscretizedData, params: LcmParams, j: int, perm):
    """Relabel the bins of variable ``j``: old bin ``b`` becomes ``perm[b]``."""
    perm = np.asarray(perm)
    inv = np.argsort(perm)
    codes = data.codes.copy()
    codes[:, j] = perm[codes[:, j]]
    variables = list(data.scheme.variables)
    vb = variables[j]
    variables[j] = VariableBins(vb.n_bins, vb.breakpoints, vb.support, vb.widths[inv], vb.categorical)
    scheme = BinningScheme(tuple(variables), data.scheme.mode)
    alpha = list(params.alpha)
    alpha[j] = alpha[j][:, inv]
    return DiscretizedData(codes, scheme), LcmParams(params.pi, alpha, params.omega, params.epsilon)
