"""Seeded Monte Carlo experiments: realization loop, coverage, rates and K' statistics.

Realization ``i`` draws from ``SeedSequence([seed, i])``, so results do not depend on
how realizations are spread over worker processes.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import SIM, CoveragePoint
from .channel import CsiSpec, PilotConfig
from .errors import (
    DegreesOfFreedomError,
    EdgeEffectError,
    GeometryError,
    NumericalError,
    ParameterError,
    SingularityError,
)
from .geometry import Window, build_typical_context, default_window_radius, sample_kprime, sample_network
from .large_system import DetEquivInput, cea_sir_det, ceu_sir_det
from .precoding import CEA_ZF, CEU_ZF
from .sir import explicit_sir, reduced_sir

__all__ = [
    "ExperimentConfig",
    "CoverageCurve",
    "MetricsReport",
    "run_experiment",
    "run_antenna_sweep",
    "rate_metrics",
    "kprime_histogram",
    "conditioned_det_equivalents",
    "coverage_ci",
    "WORKERS_ENV",
]

WORKERS_ENV = "CEAZF_WORKERS"
CSI_MODES = ("perfect", "mean_field", "explicit_pilot", "fixed")
ENGINES = ("reduced", "explicit")
Z95 = 1.959963984540054
# failed realizations are redrawn from SeedSequence([seed, i, attempt]); give up after this
MAX_ATTEMPTS = 50


@dataclass
class ExperimentConfig:
    lambda_: float = 1e-6
    alpha: float = 3.8
    F: int = 7
    N: int = 100
    K: int = 20
    schemes: tuple = (CEU_ZF, CEA_ZF)
    csi_mode: str = "mean_field"
    tau_sq: float = 0.0
    tau_bar_sq: float = 0.0
    theta_db: tuple = tuple(range(-10, 21, 2))
    n_realizations: int = 1000
    seed: int = 1
    window_radius: float | None = None
    n_exact: int = 10
    engine: str = "reduced"
    workers: int = 0  # 0: take CEAZF_WORKERS from the environment, else 1
    ci_method: str = "normal"
    collect_kprime: bool = True

    def __post_init__(self):
        self.schemes = tuple(self.schemes)
        self.theta_db = tuple(float(x) for x in self.theta_db)
        if not 1 <= self.K <= self.N:
            raise ParameterError(f"need 1 <= K <= N, got K={self.K}, N={self.N}")
        if self.n_realizations < 1:
            raise ParameterError("n_realizations must be at least 1")
        if list(self.theta_db) != sorted(self.theta_db):
            raise ParameterError("theta grid must be sorted")
        if self.csi_mode not in CSI_MODES:
            raise ParameterError(f"csi_mode must be one of {CSI_MODES}")
        if self.engine not in ENGINES:
            raise ParameterError(f"engine must be one of {ENGINES}")
        if self.ci_method not in ("normal", "wilson"):
            raise ParameterError("ci_method must be 'normal' or 'wilson'")
        for s in self.schemes:
            if s not in (CEU_ZF, CEA_ZF):
                raise ParameterError(f"unknown scheme {s!r}")

    @property
    def radius(self):
        return self.window_radius or default_window_radius(self.lambda_)

    @property
    def csi(self):
        pilot = PilotConfig(F=self.F, alpha=self.alpha, lambda_=self.lambda_)
        return CsiSpec(self.csi_mode, pilot, self.tau_sq, self.tau_bar_sq)

    @property
    def theta(self):
        return 10 ** (np.asarray(self.theta_db) / 10)


@dataclass
class CoverageCurve:
    """Coverage versus threshold for one scheme, with 95% half-widths where simulated."""

    scheme: str
    theta_db: np.ndarray
    simulated: np.ndarray | None = None
    analytical: np.ndarray | None = None
    ci_halfwidth: np.ndarray | None = None

    def points(self, method=SIM):
        vals = self.simulated if method == SIM else self.analytical
        return [CoveragePoint(float(10 ** (t / 10)), float(v), method) for t, v in zip(self.theta_db, vals)]


@dataclass
class MetricsReport:
    coverage: dict
    sum_rate: dict
    rate_95: dict
    mean_kprime: float
    ci_halfwidths: dict
    n_failed: int
    sir: dict = field(repr=False)
    records: dict = field(repr=False)


def coverage_ci(p, n, method="normal"):
    """95% half-width of a binomial proportion."""
    p = np.asarray(p, dtype=float)
    if method == "normal":
        return Z95 * np.sqrt(p * (1 - p) / n)
    z2 = Z95**2
    # Wilson interval half-width
    return Z95 * np.sqrt(p * (1 - p) / n + z2 / (4 * n**2)) / (1 + z2 / n)


def rate_metrics(sir_samples, K):
    """Sum rate ``K E[log2(1+SIR)]`` and the 5th percentile of ``log2(1+SIR)``."""
    g = np.asarray(sir_samples, dtype=float)
    if g.size == 0:
        raise ParameterError("no SIR samples")
    if np.any(g < 0):
        raise ParameterError("SIR samples must be non-negative")
    r = np.log2(1 + g)
    return float(K * np.mean(r)), float(np.percentile(r, 5))


def _bootstrap_halfwidth(rates, rng, n_boot=200):
    n = len(rates)
    idx = rng.integers(0, n, size=(n_boot, n))
    stats = np.percentile(rates[idx], 5, axis=1)
    return float(Z95 * np.std(stats, ddof=1))


def _one(cfg, i, n_values):
    """One realization evaluated at every antenna count in ``n_values``.

    Returns ``(record, failures)``; per-N entries are keyed ``"{N}:{scheme}:..."``.
    """
    window = Window(cfg.radius)
    csi = cfg.csi
    engine = reduced_sir if cfg.engine == "reduced" else explicit_sir
    failures = 0
    for attempt in range(MAX_ATTEMPTS):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, i, attempt]))
        try:
            while True:
                try:
                    net = sample_network(cfg.lambda_, window, rng)
                    ctx = build_typical_context(net, cfg.K, rng, n_exact=cfg.n_exact)
                    break
                except EdgeEffectError:
                    continue
            per_n = {N: engine(ctx, N, cfg.alpha, csi, rng, cfg.schemes, cfg.radius) for N in n_values}
        except (SingularityError, DegreesOfFreedomError, NumericalError, GeometryError):
            failures += 1
            continue
        rec = {
            "t": ctx.t,
            "s": ctx.s,
            "rk": float(np.sum(ctx.cell_mates**cfg.alpha)),
            "kprime_serving": ctx.kprime(0),
        }
        for N, sirs in per_n.items():
            for name, smp in sirs.items():
                key = f"{N}:{name}"
                rec[f"{key}:sir"] = smp.value
                rec[f"{key}:out"] = smp.out
                rec[f"{key}:second_term"] = smp.second_term
                rec[f"{key}:nulled"] = smp.typical_nulled
                rec["tau_sq"], rec["tau_bar_sq"] = smp.tau_sq, smp.tau_bar_sq
        if cfg.collect_kprime:
            rec["kprime_palm"] = sample_kprime(cfg.K, cfg.lambda_, rng)
        return rec, failures
    raise NumericalError(f"realization {i} failed {MAX_ATTEMPTS} times in a row")


def _chunk(args):
    cfg, idx, n_values = args
    return [_one(cfg, i, n_values) for i in idx]


def _workers(requested):
    if requested and requested > 0:
        return int(requested)
    env = os.environ.get(WORKERS_ENV)
    return max(1, int(env)) if env else 1


def _collect(cfg, n_values):
    n = cfg.n_realizations
    workers = min(_workers(cfg.workers), n)
    if workers == 1:
        results = [_one(cfg, i, n_values) for i in range(n)]
    else:
        chunks = [c for c in np.array_split(np.arange(n), workers * 4) if len(c)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_chunk, [(cfg, c, n_values) for c in chunks])
            results = [r for part in parts for r in part]
    records = {k: np.array([r[0][k] for r in results]) for k in results[0][0]}
    return records, int(sum(r[1] for r in results))


def _report(cfg, records, n_failed, N):
    n = cfg.n_realizations
    theta = cfg.theta
    boot_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, N, 2**31]))
    coverage, sum_rate, rate_95, ci, sir = {}, {}, {}, {}, {}
    for scheme in cfg.schemes:
        g = records[f"{N}:{scheme}:sir"]
        sir[scheme] = g
        p = np.mean(g[:, None] >= theta[None, :], axis=0)
        hw = coverage_ci(p, n, cfg.ci_method)
        coverage[scheme] = CoverageCurve(scheme, np.asarray(cfg.theta_db), p, None, hw)
        sum_rate[scheme], rate_95[scheme] = rate_metrics(g, cfg.K)
        rates = np.log2(1 + g)
        ci[scheme] = {
            "coverage": hw,
            "sum_rate": float(Z95 * cfg.K * np.std(rates, ddof=1) / np.sqrt(n)) if n > 1 else np.nan,
            "rate_95": _bootstrap_halfwidth(rates, boot_rng) if n > 1 else np.nan,
        }
    mean_kp = float(np.mean(records["kprime_palm"])) if cfg.collect_kprime else float("nan")
    prefix = f"{N}:"
    recs = {k[len(prefix):] if k.startswith(prefix) else k: v for k, v in records.items() if ":" not in k or k.startswith(prefix)}
    return MetricsReport(coverage, sum_rate, rate_95, mean_kp, ci, n_failed, sir, recs)


def run_antenna_sweep(config, n_values):
    """Metrics for several antenna counts, each realization's geometry shared across them."""
    n_values = tuple(int(N) for N in n_values)
    if not n_values or min(n_values) < config.K:
        raise ParameterError("every antenna count must be at least K")
    records, n_failed = _collect(config, n_values)
    return {N: _report(config, records, n_failed, N) for N in n_values}


def run_experiment(config):
    """Run ``config.n_realizations`` realizations and aggregate the metrics."""
    return run_antenna_sweep(config, (config.N,))[config.N]


def kprime_histogram(config, n_realizations):
    """Probability mass of K' for a typical BS, indexed by K' = 0, 1, ..."""
    if n_realizations < 100:
        raise ParameterError("need at least 100 realizations for a K' histogram")
    draws = np.array([
        sample_kprime(config.K, config.lambda_, np.random.default_rng(np.random.SeedSequence([config.seed, i, 10**6])))
        for i in range(n_realizations)
    ])
    counts = np.bincount(draws)
    return counts / counts.sum()


def conditioned_det_equivalents(records, config, N=None):
    """Per-realization deterministic-equivalent SIR under the realized geometry.

    ``R_k``, ``t``, ``s``, the CSI variances and the realized out-of-cell interference
    are taken from each record; for CEA-ZF the second-nearest BS's CSI leakage is
    replaced by its mean ``tau_bar^2 s^-alpha`` and ``K'`` is the serving BS's
    (capped) neighbor count.
    """
    N = config.N if N is None else N
    K, a = config.K, config.alpha
    out = {}
    n = len(records["t"])
    for scheme in config.schemes:
        vals = np.empty(n)
        for j in range(n):
            t, s, rk = records["t"][j], records["s"][j], records["rk"][j]
            tau, tau_bar = records["tau_sq"][j], records["tau_bar_sq"][j]
            I = records[f"{scheme}:out"][j]
            if scheme == CEU_ZF:
                vals[j] = ceu_sir_det(DetEquivInput(N, K, t, rk, I, a, 0, s, tau, tau_bar))
            else:
                kp = min(int(records["kprime_serving"][j]), max(0, N - 1 - K))
                if records[f"{scheme}:nulled"][j]:
                    I = I - records[f"{scheme}:second_term"][j]
                else:
                    tau_bar = 0.0
                vals[j] = cea_sir_det(DetEquivInput(N, K, t, rk, max(I, 0.0), a, kp, s, tau, tau_bar))
        out[scheme] = vals
    return out
