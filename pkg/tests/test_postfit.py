import math

import numpy as np
import pytest

from binclust.binning import build_scheme, discretize
from binclust.data import Categorical, Continuous, Dataset, column_sd
from binclust.lcm import FitResult, penalized_em
from binclust.postfit import (
    BinDensity,
    CategoricalProbabilities,
    bandwidths,
    bin_densities,
    hard_partition,
    kernel_refine,
)
from binclust.simulate import ShiftDesign, generate
from oracles import trapezoid


def test_hard_partition():
    t = np.array([[0.9, 0.1], [0.5, 0.5], [0.2, 0.8]])
    assert hard_partition(t).tolist() == [0, 0, 1]
    assert hard_partition(np.ones((4, 1))).tolist() == [0, 0, 0, 0]


def test_hard_partition_label_swap():
    t = np.random.default_rng(0).dirichlet(np.ones(3), size=50)
    perm = np.array([2, 0, 1])
    assert np.array_equal(perm[hard_partition(t)], hard_partition(t[:, np.argsort(perm)]))


def test_bin_density_values():
    uniform = BinDensity(np.array([0.0, 0.5, 1.0]), np.array([0.5, 0.5]) / 0.5)
    assert uniform.values.tolist() == [1.0, 1.0]
    eps = 1e-6
    skew = BinDensity(np.array([0.0, 0.5, 1.0]), np.array([1 - eps, eps]) / 0.5)
    assert skew.values == pytest.approx([2 * (1 - eps), 2 * eps])
    assert skew(np.array([0.25, 0.5, 0.75, 2.0])).tolist() == pytest.approx([2 * (1 - eps), 2 * (1 - eps), 2 * eps, 0.0])


def _fitted(n=300, seed=0, K=3):
    ds, z, _ = generate(ShiftDesign(n, J=8), seed)
    scheme = build_scheme(ds, 3)
    fit = penalized_em(K, discretize(ds, scheme), math.log(n) / 2, seed=seed, init="rows")
    return ds, z, scheme, fit


def test_bin_densities_integrate_to_one():
    ds, _, scheme, fit = _fitted()
    dens = bin_densities(fit, scheme)
    for est in dens.entries.values():
        assert est.integral() == pytest.approx(1.0, abs=1e-12)
        assert np.all(est.values >= 0)


def test_bin_densities_categorical_flagged():
    rng = np.random.default_rng(1)
    ds = Dataset(
        np.column_stack([rng.normal(size=40), rng.integers(0, 3, 40), rng.normal(size=40)]),
        (Continuous(), Categorical(3), Continuous()),
        ("a", "b", "c"),
    )
    scheme = build_scheme(ds, 4)
    fit = penalized_em(1, discretize(ds, scheme), 1.0, seed=0)
    dens = bin_densities(fit, scheme)
    assert isinstance(dens[0, 1], CategoricalProbabilities)
    assert dens[0, 1].probabilities.sum() == pytest.approx(1.0)
    dens, _ = kernel_refine(fit, ds, scheme, sweeps=2)
    assert isinstance(dens[0, 1], CategoricalProbabilities)


def test_kernel_densities_integrate_on_grid():
    ds, _, scheme, fit = _fitted()
    dens, t = kernel_refine(fit, ds, scheme, sweeps=5)
    assert np.allclose(t.sum(axis=1), 1.0)
    for est in dens.entries.values():
        assert np.all(est.values >= 0)
        assert trapezoid(est.grid.tolist(), est.values.tolist()) == pytest.approx(1.0, abs=1e-3)
        assert est.grid.size == 512


def test_zero_sweeps_keeps_posterior():
    ds, _, scheme, fit = _fitted()
    dens, t = kernel_refine(fit, ds, scheme, sweeps=0)
    assert np.array_equal(t, fit.posterior)
    # one-hot weights give the plain KDE of the assigned rows
    j = 0
    hard = np.eye(fit.K)[hard_partition(fit.posterior)]
    fit_hard = FitResult(fit.params, fit.loglik, fit.nu, fit.c_n, hard, 1, True)
    dens_h, _ = kernel_refine(fit_hard, ds, scheme, sweeps=0, grid_size=64)
    est = dens_h[1, j]
    x = ds.column(j)[hard[:, 1] == 1]
    h = column_sd(ds, j) * ds.n ** -0.2
    want = np.exp(-0.5 * ((est.grid[:, None] - x[None, :]) / h) ** 2).sum(axis=1) / (x.size * h * math.sqrt(2 * math.pi))
    assert est.values == pytest.approx(want, abs=1e-12)


def test_single_component_is_plain_kde():
    ds, _, scheme, _ = _fitted()
    fit = penalized_em(1, discretize(ds, scheme), 1.0, seed=0)
    dens, _ = kernel_refine(fit, ds, scheme, grid_size=32)
    x = ds.column(2)
    h = bandwidths(ds)[2]
    assert h == pytest.approx(column_sd(ds, 2) * ds.n ** -0.2)
    g = dens[0, 2].grid
    want = np.exp(-0.5 * ((g[:, None] - x[None, :]) / h) ** 2).mean(axis=1) / (h * math.sqrt(2 * math.pi))
    assert dens[0, 2].values == pytest.approx(want, abs=1e-12)
    assert dens[0, 2].bandwidth == pytest.approx(h)


def test_row_permutation_leaves_densities_unchanged():
    ds, _, scheme, fit = _fitted(n=120)
    perm = np.random.default_rng(3).permutation(ds.n)
    ds2 = Dataset(ds.values[perm], ds.kinds, ds.names)
    fit2 = FitResult(fit.params, fit.loglik, fit.nu, fit.c_n, fit.posterior[perm], 1, True)
    d1, t1 = kernel_refine(fit, ds, scheme, sweeps=3, grid_size=40)
    d2, t2 = kernel_refine(fit2, ds2, scheme, sweeps=3, grid_size=40)
    for key in d1.entries:
        assert d1[key].values == pytest.approx(d2[key].values, abs=1e-12)
    assert t1[perm] == pytest.approx(t2, abs=1e-12)


def test_refinement_abort_on_zero_weight():
    ds, _, scheme, fit = _fitted()
    t = fit.posterior.copy()
    t[:, 0] += t[:, 2]
    t[:, 2] = 0.0
    dead = FitResult(fit.params, fit.loglik, fit.nu, fit.c_n, t, 1, True)
    with pytest.warns(RuntimeWarning):
        dens, t_out = kernel_refine(dead, ds, scheme)
    assert np.array_equal(t_out, t)
    assert dens.meta["refinement"] == "aborted"
    assert isinstance(dens[0, 0], BinDensity)


def test_refinement_improves_or_keeps_partition():
    from binclust.metrics import ari

    ds, z, scheme, fit = _fitted(n=400, seed=5)
    _, t = kernel_refine(fit, ds, scheme)
    assert ari(hard_partition(t), z) >= ari(hard_partition(fit.posterior), z) - 0.05
