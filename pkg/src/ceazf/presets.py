"""Named experiment presets: each returns result tables and chart specifications."""
from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .analysis import EMPIRICAL, MEAN, coverage_asymptotic, coverage_cea, coverage_ceu, genggamma_cdf, genggamma_fit
from .montecarlo import ExperimentConfig, conditioned_det_equivalents, kprime_histogram, run_antenna_sweep
from .precoding import CEA_ZF, CEU_ZF

__all__ = ["ResultTable", "Chart", "ExperimentPreset", "PRESETS", "build_id", "tau_bar_for"]

# ratio E[tau_bar^2] / E[tau^2] held constant in the CSI sweep
CSI_RATIO = 1.8


def build_id():
    """sha1 over the package sources, a stand-in for a commit hash."""
    h = hashlib.sha1()
    for p in sorted(Path(__file__).parent.glob("*.py")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()[:12]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass
class ResultTable:
    name: str
    columns: list
    rows: list
    config: ExperimentConfig
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError(f"table {self.name}: row of length {len(r)} for {len(self.columns)} columns")

    def metadata(self, overrides=()):
        lines = [f"table: {self.name}", f"seed: {self.config.seed}", f"build: {build_id()}",
                 f"timestamp: {datetime.now(timezone.utc).isoformat(timespec='seconds')}"]
        lines += [f"override: {o}" for o in overrides]
        for f in dataclasses.fields(self.config):
            v = getattr(self.config, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            lines.append(f"config.{f.name}: {v}")
        lines += [f"{k}: {v}" for k, v in self.extra.items()]
        return lines

    def to_csv(self, overrides=()):
        out = [f"# {m}" for m in self.metadata(overrides)]
        out.append(",".join(self.columns))
        out += [",".join(_fmt(v) for v in r) for r in self.rows]
        return "\n".join(out) + "\n"

    def column(self, name):
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows], dtype=float)


@dataclass
class Chart:
    name: str
    series: list
    title: str
    xlabel: str
    ylabel: str
    logx: bool = False
    logy: bool = False


@dataclass
class ExperimentPreset:
    name: str
    description: str
    defaults: dict
    runner: object = field(repr=False)

    def run(self, config):
        return self.runner(config)


def tau_bar_for(tau_sq):
    return min(1.0, CSI_RATIO * tau_sq)


def _with(cfg, **kw):
    return dataclasses.replace(cfg, **kw)


def _db(x):
    return float(10 * np.log10(x))


def _fig3(cfg):
    n_values = (16, 32, 64, 128, 256)
    cases = [("perfect", _with(cfg, csi_mode="perfect", theta_db=(0.0,))),
             ("imperfect", _with(cfg, csi_mode="fixed", tau_sq=0.1, tau_bar_sq=0.2, theta_db=(0.0,)))]
    tables, series = [], []
    for label, c in cases:
        reports = run_antenna_sweep(c, n_values)
        rows = []
        for N, rep in reports.items():
            det = conditioned_det_equivalents(rep.records, c, N)
            rows.append((N, _db(np.mean(rep.sir[CEU_ZF])), _db(np.mean(det[CEU_ZF])),
                         _db(np.mean(rep.sir[CEA_ZF])), _db(np.mean(det[CEA_ZF]))))
        t = ResultTable(f"fig3_sir_vs_n_{label}", ["N", "sir_sim_ceu_db", "sir_det_ceu_db", "sir_sim_cea_db", "sir_det_cea_db"],
                        rows, c, {"failed_realizations": reports[n_values[0]].n_failed})
        tables.append(t)
        for col, lab in (("sir_sim_ceu_db", "CEU sim"), ("sir_det_ceu_db", "CEU det"),
                         ("sir_sim_cea_db", "CEA sim"), ("sir_det_cea_db", "CEA det")):
            series.append((f"{lab} ({label})", t.column("N"), t.column(col)))
    return tables, [Chart("fig3_sir_vs_n", series, "Mean SIR versus antennas", "N", "mean SIR [dB]", logx=True)]


def rk_samples(K, lambda_, alpha, n, rng):
    """Draws of ``R_k`` as a sum of ``K-1`` i.i.d. ``r^alpha`` with Rayleigh ``r``."""
    r2 = rng.exponential(1.0 / (lambda_ * np.pi), size=(n, K - 1))
    return np.sum(r2 ** (alpha / 2), axis=1)


def ks_distance(samples, cdf):
    x = np.sort(samples)
    n = len(x)
    F = cdf(x)
    return float(max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n)))


def _fig4(cfg):
    tables, series = [], []
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 4]))
    for K in (10, 30, 50):
        c = _with(cfg, K=K)
        p = genggamma_fit(K, cfg.lambda_, cfg.alpha)
        rk = rk_samples(K, cfg.lambda_, cfg.alpha, cfg.n_realizations, rng)
        x = np.quantile(rk, np.linspace(0.001, 0.999, 200))
        emp = np.searchsorted(np.sort(rk), x, side="right") / len(rk)
        fit = genggamma_cdf(x, p)
        ks = ks_distance(rk, lambda v: genggamma_cdf(v, p))
        t = ResultTable(f"fig4_rk_cdf_K{K}", ["x", "cdf_empirical", "cdf_fitted"], list(zip(x, emp, fit)), c,
                        {"mu": p.mu, "eta": p.eta, "omega": p.omega, "ks_distance": ks})
        tables.append(t)
        series += [(f"K={K} empirical", x, emp), (f"K={K} fitted", x, fit)]
    return tables, [Chart("fig4_rk_cdf", series, "CDF of R_k", "R_k [m^alpha]", "CDF", logx=True)]


def _fig5(cfg):
    rep = run_antenna_sweep(cfg, (cfg.N,))[cfg.N]
    rows = []
    for j, (tdb, th) in enumerate(zip(cfg.theta_db, cfg.theta)):
        ceu = coverage_ceu(th, cfg.N, cfg.K, cfg.lambda_, cfg.alpha, cfg.F, cfg.csi)
        cea = coverage_cea(th, cfg.N, cfg.K, cfg.lambda_, cfg.alpha, cfg.F, cfg.csi)
        hw = max(rep.coverage[CEU_ZF].ci_halfwidth[j], rep.coverage[CEA_ZF].ci_halfwidth[j])
        rows.append((tdb, rep.coverage[CEU_ZF].simulated[j], ceu, rep.coverage[CEA_ZF].simulated[j], cea, hw))
    cols = ["theta_db", "cov_sim_ceu", "cov_ana_ceu", "cov_sim_cea", "cov_ana_cea", "ci_halfwidth"]
    t = ResultTable("fig5_coverage", cols, rows, cfg, {"failed_realizations": rep.n_failed})
    x = t.column("theta_db")
    series = [(lab, x, t.column(c)) for lab, c in zip(("CEU sim", "CEU analysis", "CEA sim", "CEA analysis"), cols[1:5])]
    return [t], [Chart("fig5_coverage", series, "Coverage versus threshold", "theta [dB]", "coverage")]


def _fig6(cfg):
    tables, series = [], []
    for K in (5, 10, 15):
        c = _with(cfg, K=K)
        pmf = kprime_histogram(c, cfg.n_realizations)
        p = genggamma_fit(K, cfg.lambda_, cfg.alpha)
        rows = []
        for tdb, th in zip(cfg.theta_db, cfg.theta):
            emp = coverage_cea(th, cfg.N, K, cfg.lambda_, cfg.alpha, cfg.F, cfg.csi, EMPIRICAL, pmf, params=p)
            mean = coverage_cea(th, cfg.N, K, cfg.lambda_, cfg.alpha, cfg.F, cfg.csi, MEAN, params=p)
            rows.append((tdb, emp, mean))
        mean_kp = float(np.dot(np.arange(len(pmf)), pmf))
        t = ResultTable(f"fig6_kprime_modes_K{K}", ["theta_db", "cov_empirical_kprime", "cov_mean_kprime"], rows, c,
                        {"mean_kprime": mean_kp})
        tables.append(t)
        x = t.column("theta_db")
        series += [(f"K={K} empirical K'", x, t.column("cov_empirical_kprime")),
                   (f"K={K} K'=K", x, t.column("cov_mean_kprime"))]
    return tables, [Chart("fig6_kprime_modes", series, "CEA-ZF coverage, K' models", "theta [dB]", "coverage")]


N_SWEEP = (50, 75, 100, 150, 200, 300)


def _n_sweep(cfg):
    c = _with(cfg, theta_db=(0.0,))
    return c, run_antenna_sweep(c, N_SWEEP)


def _fig7(cfg):
    c, reports = _n_sweep(cfg)
    rows = []
    for N, rep in reports.items():
        ceu = coverage_ceu(1.0, N, c.K, c.lambda_, c.alpha, c.F, c.csi)
        cea = coverage_cea(1.0, N, c.K, c.lambda_, c.alpha, c.F, c.csi)
        hw = max(rep.coverage[CEU_ZF].ci_halfwidth[0], rep.coverage[CEA_ZF].ci_halfwidth[0])
        rows.append((N, rep.coverage[CEU_ZF].simulated[0], ceu, rep.coverage[CEA_ZF].simulated[0], cea, hw))
    cols = ["N", "cov_sim_ceu", "cov_ana_ceu", "cov_sim_cea", "cov_ana_cea", "ci_halfwidth"]
    t = ResultTable("fig7_coverage_vs_n", cols, rows, c)
    x = t.column("N")
    series = [(lab, x, t.column(k)) for lab, k in zip(("CEU sim", "CEU analysis", "CEA sim", "CEA analysis"), cols[1:5])]
    return [t], [Chart("fig7_coverage_vs_n", series, "Coverage at 0 dB versus antennas", "N", "coverage")]


def _fig8(cfg):
    c, reports = _n_sweep(cfg)
    rows = [(N, r.rate_95[CEU_ZF], r.rate_95[CEA_ZF], r.ci_halfwidths[CEU_ZF]["rate_95"], r.ci_halfwidths[CEA_ZF]["rate_95"])
            for N, r in reports.items()]
    t = ResultTable("fig8_rate95_vs_n", ["N", "rate95_ceu", "rate95_cea", "ci_ceu", "ci_cea"], rows, c)
    x = t.column("N")
    series = [("CEU-ZF", x, t.column("rate95_ceu")), ("CEA-ZF", x, t.column("rate95_cea"))]
    return [t], [Chart("fig8_rate95_vs_n", series, "95%-likely rate versus antennas", "N", "rate [bit/s/Hz]")]


K_SWEEP = tuple(range(2, 41, 2))


def sumrate_sweep(cfg, k_values=K_SWEEP):
    rows = []
    for K in k_values:
        c = _with(cfg, K=K, theta_db=(0.0,), collect_kprime=False)
        r = run_antenna_sweep(c, (c.N,))[c.N]
        rows.append((K, r.sum_rate[CEU_ZF], r.sum_rate[CEA_ZF], r.ci_halfwidths[CEU_ZF]["sum_rate"],
                     r.ci_halfwidths[CEA_ZF]["sum_rate"]))
    return rows


def _fig9(cfg):
    rows = sumrate_sweep(cfg)
    t = ResultTable("fig9_sumrate_vs_k", ["K", "sumrate_ceu", "sumrate_cea", "ci_ceu", "ci_cea"], rows, cfg)
    x = t.column("K")
    series = [("CEU-ZF", x, t.column("sumrate_ceu")), ("CEA-ZF", x, t.column("sumrate_cea"))]
    return [t], [Chart("fig9_sumrate_vs_k", series, "Sum rate versus users per cell", "K", "sum rate [bit/s/Hz]")]


TAU_SWEEP = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


def _fig10_11(cfg):
    rows = []
    for tau in TAU_SWEEP:
        c = _with(cfg, csi_mode="fixed", tau_sq=tau, tau_bar_sq=tau_bar_for(tau), theta_db=(0.0,), collect_kprime=False)
        r = run_antenna_sweep(c, (c.N,))[c.N]
        ceu = coverage_ceu(1.0, c.N, c.K, c.lambda_, c.alpha, c.F, c.csi)
        cea = coverage_cea(1.0, c.N, c.K, c.lambda_, c.alpha, c.F, c.csi)
        rows.append((tau, c.tau_bar_sq, r.coverage[CEU_ZF].simulated[0], ceu, r.coverage[CEA_ZF].simulated[0], cea,
                     r.sum_rate[CEU_ZF], r.sum_rate[CEA_ZF]))
    cols = ["tau_sq", "tau_bar_sq", "cov_sim_ceu", "cov_ana_ceu", "cov_sim_cea", "cov_ana_cea", "sumrate_ceu", "sumrate_cea"]
    t = ResultTable("fig10_11_csi_sweep", cols, rows, _with(cfg, csi_mode="fixed", theta_db=(0.0,)),
                    {"tau_bar_rule": f"min(1, {CSI_RATIO} tau_sq)"})
    x = t.column("tau_sq")
    cov = [(lab, x, t.column(k)) for lab, k in zip(("CEU sim", "CEU analysis", "CEA sim", "CEA analysis"), cols[2:6])]
    rate = [("CEU-ZF", x, t.column("sumrate_ceu")), ("CEA-ZF", x, t.column("sumrate_cea"))]
    return [t], [Chart("fig10_coverage_vs_tau", cov, "Coverage at 0 dB versus CSI error", "tau^2", "coverage"),
                 Chart("fig11_sumrate_vs_tau", rate, "Sum rate versus CSI error", "tau^2", "sum rate [bit/s/Hz]")]


def loglog_slope(n, y):
    return float(np.polyfit(np.log(n), np.log(y), 1)[0])


def _asymptotic(cfg):
    n_values = (200, 400, 800)
    c = _with(cfg, theta_db=(0.0,), collect_kprime=False)
    reports = run_antenna_sweep(c, n_values)
    rows = []
    for N, r in reports.items():
        rows.append((N, 1 - r.coverage[CEU_ZF].simulated[0], 1 - r.coverage[CEA_ZF].simulated[0],
                     1 - coverage_asymptotic(1.0, c.K, N, "CEU"), 1 - coverage_asymptotic(1.0, c.K, N, "CEA")))
    cols = ["N", "outage_sim_ceu", "outage_sim_cea", "outage_asym_ceu", "outage_asym_cea"]
    t = ResultTable("asymptotic_scaling", cols, rows, c)
    N = t.column("N")
    with np.errstate(divide="ignore"):
        t.extra = {"slope_ceu": loglog_slope(N, t.column("outage_sim_ceu")),
                   "slope_cea": loglog_slope(N, t.column("outage_sim_cea"))}
    series = [(lab, N, t.column(k)) for lab, k in zip(("CEU sim", "CEA sim", "CEU asymptotic", "CEA asymptotic"), cols[1:])]
    return [t], [Chart("asymptotic_scaling", series, "Outage at 0 dB, perfect CSI", "N", "outage", logx=True, logy=True)]


_SEC3 = {"alpha": 4.0, "K": 10}
PRESETS = {
    p.name: p
    for p in [
        ExperimentPreset("fig3_sir_vs_n", "mean SIR versus N, simulation and deterministic equivalent",
                         {**_SEC3, "n_realizations": 2000}, _fig3),
        ExperimentPreset("fig4_rk_cdf", "empirical and generalized-gamma CDF of R_k for K in 10, 30, 50",
                         {**_SEC3, "n_realizations": 100_000}, _fig4),
        ExperimentPreset("fig5_coverage", "coverage versus threshold, simulation and analysis",
                         {**_SEC3, "N": 100, "n_realizations": 10_000}, _fig5),
        ExperimentPreset("fig6_kprime_modes", "CEA-ZF coverage with empirical K' versus K'=K",
                         {**_SEC3, "N": 100, "n_realizations": 10_000}, _fig6),
        ExperimentPreset("fig7_coverage_vs_n", "coverage at 0 dB versus N", {"n_realizations": 5000}, _fig7),
        ExperimentPreset("fig8_rate95_vs_n", "95%-likely rate versus N", {"n_realizations": 5000}, _fig8),
        ExperimentPreset("fig9_sumrate_vs_k", "sum rate versus K at N=100", {"N": 100, "n_realizations": 1000}, _fig9),
        ExperimentPreset("fig10_11_csi_sweep", "coverage and sum rate versus CSI error",
                         {"N": 100, "n_realizations": 3000}, _fig10_11),
        ExperimentPreset("asymptotic_scaling", "outage scaling in N under perfect CSI",
                         {**_SEC3, "csi_mode": "perfect", "n_realizations": 20_000}, _asymptotic),
    ]
}
