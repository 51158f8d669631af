"""Replicated simulation benchmarks with on-disk caching.

A benchmark draws ``replicates`` datasets from a design, runs one selection
mode on each and aggregates the outcomes. Replicate ``r`` uses streams derived
from ``(seed, r)`` only, so results do not depend on worker count or order.
Each finished replicate is written to ``<cache>/<config hash>/`` and reused by
later runs with the same configuration.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .binning import build_scheme, discretize
from .metrics import ari, selection_table, sensitivity, specificity
from .postfit import hard_partition
from .selection import BinsConfig, PenaltyRule, fit_k, select_full, select_k_only
from .seeding import derive_seed
from .simulate import KasaharaDesign, ShiftDesign, generate, tau_for_error

MODES = ("full", "k-only", "known-k")


@dataclass(frozen=True)
class BenchConfig:
    """Everything that determines a benchmark's output, except the replicate count."""

    design: str = "shift"
    n: int = 500
    J: int = 20
    noise: str = "gaussian"
    error: float = 0.05
    tau: float | None = None
    mode: str = "full"
    kmax: int = 4
    penalty: str = "bic"
    bins: int | None = None
    bins_rate: int = 6
    bins_mode: str = "quantile"
    restarts: int = 20
    init: str = "random"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.design not in ("shift", "kasahara"):
            raise ValueError("design must be 'shift' or 'kasahara'")
        PenaltyRule.parse(self.penalty)

    def make_design(self):
        if self.design == "kasahara":
            return KasaharaDesign(self.n)
        tau = self.tau if self.tau is not None else tau_for_error(self.noise, self.error)
        return ShiftDesign(self.n, J=self.J, noise=self.noise, tau=tau)

    @property
    def bins_config(self) -> BinsConfig:
        return BinsConfig(self.bins, self.bins_rate, self.bins_mode)

    def to_dict(self) -> dict:
        return asdict(self)

    def key(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def run_replicate(config: BenchConfig, r: int) -> dict:
    """One replicate; failures are captured in the record instead of raised."""
    design = config.make_design()
    rep_seed = derive_seed(config.seed, r)
    record = {"replicate": r}
    try:
        dataset, z, omega_true = generate(design, rep_seed)
        rule = PenaltyRule.parse(config.penalty)
        fit_seed = derive_seed(rep_seed, 1)
        em = {"init": config.init}
        if config.mode == "known-k":
            scheme = build_scheme(dataset, config.bins_config.resolve(dataset.n), config.bins_mode)
            fit = fit_k(discretize(dataset, scheme), design.K, rule, restarts=config.restarts, seed=fit_seed, **em)
            if fit is None:
                raise RuntimeError("every restart degenerated")
        else:
            select = select_full if config.mode == "full" else select_k_only
            res = select(dataset, config.kmax, rule, config.bins_config, restarts=config.restarts, seed=fit_seed, **em)
            fit = res.best
        record.update(
            k_hat=fit.K,
            omega=list(fit.omega),
            criterion=fit.criterion,
            ari=ari(hard_partition(fit.posterior), z),
            error=None,
        )
        if config.mode != "k-only":
            record["sen"] = sensitivity(fit.omega, omega_true)
            if len(omega_true) < dataset.J:
                record["spe"] = specificity(fit.omega, omega_true, dataset.J)
    except Exception as exc:  # recorded, not fatal
        record["error"] = "".join(traceback.format_exception_only(type(exc), exc)).strip()
    return record


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _replicate_task(args):
    config, r = args
    return run_replicate(config, r)


@dataclass
class BenchReport:
    config: BenchConfig
    replicates: int
    records: list = field(default_factory=list)

    @property
    def ok(self) -> list:
        return [rec for rec in self.records if rec.get("error") is None]

    def k_true(self) -> int:
        return self.config.make_design().K

    def summary(self) -> dict:
        ok = self.ok
        out = {"replicates": self.replicates, "succeeded": len(ok), "failed": self.replicates - len(ok)}
        if not ok:
            return out
        if self.config.mode != "known-k":
            out["selection"] = selection_table([rec["k_hat"] for rec in ok], self.config.kmax, self.k_true()).to_dict()
        for key in ("sen", "spe", "ari"):
            vals = [rec[key] for rec in ok if key in rec]
            if vals:
                out[f"mean_{key}"] = round(float(np.mean(vals)), 6)
        return out

    def to_dict(self) -> dict:
        return {
            "version": __version__,
            "config": {**self.config.to_dict(), "replicates": self.replicates},
            "summary": self.summary(),
            "records": self.records,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def format(self) -> str:
        s = self.summary()
        c = self.config
        lines = [f"design={c.design} n={c.n} mode={c.mode} replicates={s['replicates']} failed={s['failed']}"]
        if "selection" in s:
            sel = s["selection"]
            keys = list(sel["probabilities"])
            lines.append("  ".join(f"{'K=' + k:>6}" for k in keys) + f"  {'Tr.':>6}  {'Ov.':>6}")
            lines.append(
                "  ".join(f"{sel['probabilities'][k]:>6.3f}" for k in keys) + f"  {sel['Tr']:>6.3f}  {sel['Ov']:>6.3f}"
            )
        for key in ("sen", "spe", "ari"):
            if f"mean_{key}" in s:
                lines.append(f"mean {key}: {s['mean_' + key]:.3f}")
        return "\n".join(lines)


def run_bench(config: BenchConfig, replicates: int = 50, *, jobs: int = 1, cache_dir=None) -> BenchReport:
    """Run (or resume) a benchmark and aggregate the replicate records."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    cache = None
    done = {}
    if cache_dir is not None:
        cache = Path(cache_dir) / config.key()
        cache.mkdir(parents=True, exist_ok=True)
        _write_atomic(cache / "config.json", json.dumps(config.to_dict(), indent=2, sort_keys=True))
        for r in range(replicates):
            path = cache / f"rep_{r:05d}.json"
            if path.exists():
                done[r] = json.loads(path.read_text(encoding="utf-8"))

    todo = [(config, r) for r in range(replicates) if r not in done]

    def store(rec):
        done[rec["replicate"]] = rec
        if cache is not None:
            _write_atomic(cache / f"rep_{rec['replicate']:05d}.json", json.dumps(rec, sort_keys=True))

    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for rec in pool.map(_replicate_task, todo):
                store(rec)
    else:
        for task in todo:
            store(_replicate_task(task))
    # round-trip through JSON so fresh and cached records are identical
    records = [json.loads(json.dumps(done[r], sort_keys=True)) for r in range(replicates)]
    return BenchReport(config, replicates, records)
