"""Monte-Carlo sweeps comparing the optimized surface against two benchmarks.

Methods
-------
safe_isac
    Reflection phases from :func:`~safeisac.jamming.solve_p2`, transmission
    phases from the concealment solver.
random_phase_star
    Both phase vectors i.i.d. uniform, same energy split.
reflect_only_ris
    All energy reflected (``amp_r = 1``, ``amp_t = 0``); reflection phases
    optimized as for ``safe_isac``, the sensing side gets no RIS path.

Every method in a ``(value, trial)`` cell sees the same channel realization.
The trial seed depends on ``(seed_base, trial)`` only, so a given trial index
uses the same small-scale fading across sweep values (common random numbers).
"""
from __future__ import annotations

import csv
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import StarRisState, evaluate_metrics, random_phases
from .concealment import solve_concealment
from .errors import ConfigError, InfeasibleError
from .jamming import solve_p2
from .report import SolveReport
from .scenario import ScenarioConfig, generate_channels, with_detector_distance

METHODS = ("safe_isac", "random_phase_star", "reflect_only_ris")
VARIABLES = ("n_jam", "detector_distance", "n_ris")
FIELDS = (
    "method",
    "sweep_value",
    "trial",
    "jam_gain_db",
    "malicious_sinr_db",
    "comm_gain_db",
    "sum_rate",
    "p_det_malicious",
    "p_det_isac",
    "feasible_flag",
    "wall_time_ms",
)
# per-method substream tags for the phase draws
_TAGS = {"safe_isac": 1, "random_phase_star": 2, "reflect_only_ris": 3}


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    n_trials: int = 100
    methods: tuple = METHODS
    base: ScenarioConfig = field(default_factory=ScenarioConfig)
    seed_base: int = 0
    timing: bool = False

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ConfigError(f"unknown sweep variable {self.variable!r}; expected one of {', '.join(VARIABLES)}")
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        if list(self.values) != sorted(self.values):
            raise ConfigError("sweep values must be sorted")
        if self.n_trials < 1:
            raise ConfigError("n_trials must be at least 1")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"unknown methods: {', '.join(bad) or '(none given)'}")
        if not 0 <= int(self.seed_base) < 2**64:
            raise ConfigError("seed_base must fit in an unsigned 64-bit integer")


@dataclass
class SweepResult:
    """Rows sorted by ``(method, sweep_value, trial)``; dB fields are ``10 log10``."""

    variable: str
    rows: list = field(default_factory=list)

    def column(self, name, method=None, value=None):
        out = []
        for r in self.rows:
            if method is not None and r["method"] != method:
                continue
            if value is not None and r["sweep_value"] != value:
                continue
            out.append(r[name])
        return np.array(out)

    @property
    def methods(self):
        return sorted({r["method"] for r in self.rows}, key=_method_key)

    @property
    def values(self):
        return sorted({r["sweep_value"] for r in self.rows})


def _method_key(m):
    return METHODS.index(m) if m in METHODS else len(METHODS)


def trial_seed(seed_base, trial):
    return int(np.random.SeedSequence([int(seed_base), int(trial)]).generate_state(1, np.uint64)[0])


def _method_rng(seed, method, purpose):
    return np.random.default_rng(np.random.SeedSequence([int(seed), _TAGS[method], purpose]))


def apply_value(cfg, variable, value):
    if variable == "n_jam":
        return replace(cfg, n_jam=int(value))
    if variable == "n_ris":
        return replace(cfg, n_ris=int(value))
    if variable == "detector_distance":
        return with_detector_distance(cfg, float(value))
    raise ConfigError(f"unknown sweep variable {variable!r}")


def run_method(method, ch, cfg):
    """Phase design plus metric evaluation for one channel realization.

    Returns ``(MetricReport, SolveReport)``. Solver failures are folded into
    ``SolveReport.feasible``; only programming errors propagate.
    """
    L = cfg.n_ris
    if method == "random_phase_star":
        psi_t = random_phases(_method_rng(cfg.seed, method, 0), L)
        psi_r = random_phases(_method_rng(cfg.seed, method, 1), L)
        ris = StarRisState.from_config(psi_t, psi_r, cfg)
        m = evaluate_metrics(ch, ris, cfg)
        ok = m.gamma_sr >= cfg.gamma_min and m.comm_gain >= cfg.g_th
        return m, SolveReport(status="not_optimized", feasible=bool(ok))

    if method == "reflect_only_ris":
        x, rep = solve_p2(ch, cfg, amp_r=1.0)
        ris = StarRisState(np.ones(L, complex), x.psi_r, 0.0, 1.0)
        m = evaluate_metrics(ch, ris, cfg)
        if m.gamma_sr < cfg.gamma_min:
            rep.feasible = False
            rep.message = (rep.message + "; " if rep.message else "") + "sensing floor violated without a transmission path"
        return m, rep

    if method == "safe_isac":
        x, rep = solve_p2(ch, cfg)
        try:
            sol = solve_concealment(ch, cfg, rng=_method_rng(cfg.seed, method, 0))
            psi_t, conceal_ok, msg = sol.psi_t, sol.report.feasible, sol.report.message
        except (InfeasibleError, np.linalg.LinAlgError) as exc:
            psi_t, conceal_ok, msg = random_phases(_method_rng(cfg.seed, method, 1), L), False, str(exc)
        ris = StarRisState.from_config(psi_t, x.psi_r, cfg)
        m = evaluate_metrics(ch, ris, cfg)
        rep.feasible = rep.feasible and conceal_ok
        if msg:
            rep.message = (rep.message + "; " if rep.message else "") + msg
        return m, rep

    raise ConfigError(f"unknown method {method!r}")


def _db(x):
    return 10.0 * math.log10(x) if x > 0 else -math.inf


def _cell(args):
    spec, value, trial = args
    cfg = apply_value(replace(spec.base, seed=trial_seed(spec.seed_base, trial)), spec.variable, value)
    ch = generate_channels(cfg)
    rows = []
    for method in spec.methods:
        t0 = time.perf_counter()
        m, rep = run_method(method, ch, cfg)
        ms = (time.perf_counter() - t0) * 1e3
        rows.append(
            {
                "method": method,
                "sweep_value": value,
                "trial": trial,
                "jam_gain_db": _db(m.jam_gain),
                "malicious_sinr_db": _db(m.gamma_sd),
                "comm_gain_db": _db(m.comm_gain),
                "sum_rate": m.sum_rate,
                "p_det_malicious": m.p_det_malicious,
                "p_det_isac": m.p_det_isac,
                "feasible_flag": bool(rep.feasible),
                "wall_time_ms": ms if spec.timing else None,
            }
        )
    return rows


def _sort_key(r):
    return (_method_key(r["method"]), r["sweep_value"], r["trial"])


def run_sweep(spec, out_csv=None, jobs=1, progress=None):
    """Run every ``(value, trial)`` cell and collect one row per method.

    With ``jobs > 1`` cells run in a process pool. Rows are sorted before
    writing, so the CSV does not depend on completion order. If interrupted,
    the rows gathered so far are written and the interrupt re-raised.
    """
    cells = [(spec, v, t) for v in spec.values for t in range(spec.n_trials)]
    rows = []
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for i, r in enumerate(pool.map(_cell, cells, chunksize=4)):
                    rows.extend(r)
                    if progress:
                        progress(i + 1, len(cells))
        else:
            for i, c in enumerate(cells):
                rows.extend(_cell(c))
                if progress:
                    progress(i + 1, len(cells))
    except KeyboardInterrupt:
        if out_csv is not None:
            write_csv(SweepResult(spec.variable, sorted(rows, key=_sort_key)), out_csv)
        raise
    result = SweepResult(spec.variable, sorted(rows, key=_sort_key))
    if out_csv is not None:
        write_csv(result, out_csv)
    return result


# --- CSV ------------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(result, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(FIELDS)
        for r in result.rows:
            w.writerow([_fmt(r[k]) for k in FIELDS])


def _parse_value(text):
    try:
        return int(text)
    except ValueError:
        return float(text)


def read_csv(path, variable=""):
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != FIELDS:
            raise ValueError(f"{path}: header does not match the sweep result fields")
        for r in reader:
            rows.append(
                {
                    "method": r["method"],
                    "sweep_value": _parse_value(r["sweep_value"]),
                    "trial": int(r["trial"]),
                    **{k: float(r[k]) for k in FIELDS[3:9]},
                    "feasible_flag": r["feasible_flag"] == "1",
                    "wall_time_ms": float(r["wall_time_ms"]) if r["wall_time_ms"] else None,
                }
            )
    return SweepResult(variable, rows)


# --- plots ----------------------------------------------------------------------

PLOT_METRICS = {
    "jam_gain_db": "Residual jamming gain (dB)",
    "malicious_sinr_db": "Malicious detector SINR (dB)",
    "comm_gain_db": "Communication gain (dB)",
    "sum_rate": "Sum rate (bit/s/Hz)",
    "p_det_malicious": "Malicious detection probability",
}
AXIS_LABELS = {"n_jam": "Jammer antennas $N_j$", "n_ris": "STAR-RIS elements $L$", "detector_distance": "Detector distance (m)"}


def summarize(result, metric):
    """``{method: (values, means, standard errors)}``."""
    out = {}
    for method in result.methods:
        xs, mu, se = [], [], []
        for v in result.values:
            col = result.column(metric, method, v)
            if col.size == 0:
                continue
            xs.append(v)
            mu.append(float(np.mean(col)))
            se.append(float(np.std(col, ddof=1) / math.sqrt(col.size)) if col.size > 1 else 0.0)
        out[method] = (np.array(xs), np.array(mu), np.array(se))
    return out


def emit_plots(result, out_dir):
    """Write one PNG per metric; returns the list of paths."""
    if not result.rows:
        warnings.warn("empty sweep result: no plots written", RuntimeWarning, stacklevel=2)
        return []
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for metric, label in PLOT_METRICS.items():
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for method, (x, mu, se) in summarize(result, metric).items():
            ax.errorbar(x, mu, yerr=se, marker="o", capsize=3, label=method)
        ax.set_xlabel(AXIS_LABELS.get(result.variable, result.variable or "sweep value"))
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out_dir / f"{metric}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
