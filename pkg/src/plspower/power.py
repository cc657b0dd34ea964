"""Monte Carlo power and sample-size estimation for two-class PLSc studies."""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InvalidInput, PlsPowerError, PowerRunFailed
from .kernels import STAT_KINDS
from .permtest import adjust_bonferroni, normalize_kind, permutation_test
from .plsc import DEFAULT_EPSILON, fit_plsc
from .preprocess import center
from .simulate import augment_with_residual_pca, kde_fit_per_class, simulate_dataset

log = logging.getLogger(__name__)

FAILURE_TOLERANCE = 0.02


@dataclass(frozen=True)
class PowerConfig:
    A: int = 1
    stat: str = "r2"
    alpha: float = 0.05
    I: int = 100
    J: int = 200
    epsilon: float = DEFAULT_EPSILON
    n1: int = 5
    n2: int = 5
    seed: int = 0
    variance_threshold: float = 0.8
    threads: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "stat", normalize_kind(self.stat))
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInput(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.I < 1:
            raise InvalidInput("I must be at least 1")
        if self.J < 2:
            raise InvalidInput("J must be at least 2")
        if self.n1 < 2 or self.n2 < 2:
            raise InvalidInput("n1 and n2 must be at least 2")
        if self.A < 1:
            raise InvalidInput("A must be at least 1")

    def with_n(self, n_per_class):
        return replace(self, n1=n_per_class, n2=n_per_class)


@dataclass(frozen=True)
class IterationRecord:
    index: int
    p_raw: dict
    p_adjusted: dict
    reject: dict
    rv: float
    procrustes: float
    gram_error: float
    cross_error: float
    signal_ratio: float
    failed: Optional[str] = None


@dataclass(frozen=True)
class PowerEstimate:
    stat: str
    power: float
    rejections: int
    I: int
    mc_stderr: float
    n1: int
    n2: int
    A: int
    per_iteration: tuple = field(default=(), repr=False)
    n_failed: int = 0
    warnings: tuple = ()

    def to_dict(self, include_iterations=False):
        out = {
            "stat": self.stat, "A": self.A, "n1": self.n1, "n2": self.n2,
            "power": self.power, "rejections": self.rejections, "I": self.I,
            "mc_stderr": self.mc_stderr, "n_failed": self.n_failed,
            "warnings": list(self.warnings),
        }
        if include_iterations:
            out["per_iteration"] = [asdict(r) for r in self.per_iteration]
        return out


@dataclass(frozen=True)
class SampleSizeResult:
    n_hat: Optional[int]
    reached: bool
    target: float
    n_max: int
    trace: tuple


def worker_count(cfg_threads=None):
    """Workers from the config, else PLSPOWER_THREADS, else all cores."""
    if cfg_threads:
        return max(1, int(cfg_threads))
    env = os.environ.get("PLSPOWER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidInput(f"PLSPOWER_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def iteration_rng(seed, i):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


@dataclass(frozen=True)
class PilotFit:
    """Everything the Monte Carlo loop needs from the pilot, fitted once."""

    aug: object
    kdes: dict
    model: object


def prepare_pilot(pilot, cfg):
    if pilot.labels is None:
        raise InvalidInput("pilot dataset has no class labels")
    Xc, _ = center(pilot.X)
    model = fit_plsc(Xc, pilot.labels, cfg.A, cfg.epsilon)
    aug = augment_with_residual_pca(model, cfg.variance_threshold)
    return PilotFit(aug, kde_fit_per_class(aug.T_aug, aug.labels), model)


def _one_iteration(fit, cfg, i):
    rng = iteration_rng(cfg.seed, i)
    try:
        sim = simulate_dataset(fit.aug, cfg.n1, cfg.n2, rng, kdes=fit.kdes)
        Xs, _ = center(sim.X_tilde)
        res = permutation_test(Xs, sim.labels, cfg.A, cfg.epsilon, cfg.J, rng)
    except PlsPowerError as exc:
        return IterationRecord(i, {}, {}, {}, math.nan, math.nan, math.nan, math.nan, math.nan,
                               failed=f"{type(exc).__name__}: {exc}")
    p_raw = {k: r.p_value for k, r in res.items()}
    p_adj = {k: adjust_bonferroni(p, cfg.A) for k, p in p_raw.items()}
    reject = {k: bool(p <= cfg.alpha) for k, p in p_adj.items()}
    d = sim.diagnostics
    return IterationRecord(i, p_raw, p_adj, reject, d.rv, d.procrustes, d.gram_error,
                           d.cross_error, d.signal_ratio)


def run_iterations(pilot, cfg, fit=None):
    """All I Monte Carlo iterations, ordered by index."""
    fit = fit or prepare_pilot(pilot, cfg)
    workers = min(worker_count(cfg.threads), cfg.I)
    if workers == 1:
        return [_one_iteration(fit, cfg, i) for i in range(cfg.I)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: _one_iteration(fit, cfg, i), range(cfg.I)))


def summarize(records, cfg, kind, fit=None):
    ok = [r for r in records if r.failed is None]
    n_failed = len(records) - len(ok)
    if n_failed > FAILURE_TOLERANCE * len(records):
        first = next(r.failed for r in records if r.failed)
        raise PowerRunFailed(f"{n_failed} of {len(records)} iterations failed; first: {first}")
    notes = []
    if n_failed:
        notes.append(f"{n_failed} failed iteration(s) excluded")
    low = sum(1 for r in ok if r.signal_ratio < 3.0)
    if low:
        notes.append(f"{low} simulation(s) with signal/residual norm ratio below 3")
    if fit is not None and not fit.aug.threshold_reached:
        notes.append("residual PCA could not reach the variance threshold")
    n_ok = len(ok)
    rejections = sum(1 for r in ok if r.reject[kind])
    power = rejections / n_ok
    return PowerEstimate(
        stat=kind,
        power=power,
        rejections=rejections,
        I=n_ok,
        mc_stderr=math.sqrt(power * (1.0 - power) / n_ok),
        n1=cfg.n1,
        n2=cfg.n2,
        A=cfg.A,
        per_iteration=tuple(records),
        n_failed=n_failed,
        warnings=tuple(notes),
    )


def estimate_power_all(pilot, cfg, kinds=STAT_KINDS, fit=None):
    """Power for several statistics from one shared set of simulations."""
    fit = fit or prepare_pilot(pilot, cfg)
    records = run_iterations(pilot, cfg, fit)
    return {normalize_kind(k): summarize(records, cfg, normalize_kind(k), fit) for k in kinds}


def estimate_power(pilot, cfg):
    """Fraction of simulated datasets whose Bonferroni-adjusted permutation
    p-value for ``cfg.stat`` is at most ``cfg.alpha``."""
    return estimate_power_all(pilot, cfg)[cfg.stat]


def estimate_sample_size(pilot, cfg, beta, n_min, n_max, step=1):
    """Smallest per-class size in ``n_min, n_min + step, ...`` (capped at
    ``n_max``) whose power reaches ``1 - beta``."""
    if not 0.0 < beta < 1.0:
        raise InvalidInput(f"beta must lie in (0, 1), got {beta}")
    if n_min < 2 or n_max < n_min or step < 1:
        raise InvalidInput("need 2 <= n_min <= n_max and step >= 1")
    target = 1.0 - beta
    fit = prepare_pilot(pilot, cfg)
    trace = []
    n = n_min
    while n <= n_max:
        est = estimate_power_all(pilot, cfg.with_n(n), fit=fit)[cfg.stat]
        trace.append((n, est))
        if est.power >= target:
            return SampleSizeResult(n, True, target, n_max, tuple(trace))
        n += step
    return SampleSizeResult(None, False, target, n_max, tuple(trace))


def power_curve(pilot, cfg, n_list, a_list, kinds=None):
    """Full factorial (A, n) grid. Returns rows ``(A, n, {kind: PowerEstimate})``."""
    if not n_list or not a_list:
        raise InvalidInput("power_curve needs non-empty n and A grids")
    kinds = kinds or (cfg.stat,)
    rows = []
    for A in a_list:
        cfg_a = replace(cfg, A=int(A))
        fit = prepare_pilot(pilot, cfg_a)
        for n in n_list:
            est = estimate_power_all(pilot, cfg_a.with_n(int(n)), kinds, fit=fit)
            rows.append((int(A), int(n), est))
    return rows
