"""Quick oracle and property checks that ship with the package.

``safeisac selftest`` runs these without pytest. Each check returns
``(name, passed, detail)``; the full suites live under ``tests/``.
"""
from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .channel import detection_probability
from .concealment import build_problem, dinkelbach_solve, solve_concealment
from .jamming import (
    CgOptions,
    PenaltyProblem,
    directional_derivative,
    penalty_objective,
    pr_cg_solve,
    retract,
    riemannian_gradient,
)
from .scenario import ScenarioConfig, generate_channels
from .sdp import OPTIMAL, SdpProblem, solve_sdp


def _five_point(p, psi, v, h):
    f = [penalty_objective(p, retract(psi, v, t)) for t in (2 * h, h, -h, -2 * h)]
    return (-f[0] + 8 * f[1] - 8 * f[2] + f[3]) / (12 * h)


def _gradient_check():
    worst = 0.0
    for seed in range(5):
        cfg = replace(ScenarioConfig(), seed=seed, n_ris=16)
        ch = generate_channels(cfg)
        p = PenaltyProblem(ch, cfg.g_th, 1.0, cfg.amp_r)
        rng = np.random.default_rng(seed)
        psi = np.exp(2j * np.pi * rng.uniform(size=16))
        for _ in range(5):
            v = riemannian_gradient(psi, rng.standard_normal(16) + 1j * rng.standard_normal(16))
            fd = _five_point(p, psi, v, 1e-3)
            an = directional_derivative(p, psi, v)
            worst = max(worst, abs(fd - an) / max(abs(an), 1e-300))
    return "gradient vs finite differences", worst <= 1e-6, f"max rel err {worst:.2e}"


def _manifold_check():
    cfg = replace(ScenarioConfig(), n_ris=24)
    ch = generate_channels(cfg)
    p = PenaltyProblem(ch, cfg.g_th, 1.0, cfg.amp_r)
    worst = [0.0, 0.0]

    def cb(state):
        psi = state.point.psi_r
        worst[0] = max(worst[0], float(np.max(np.abs(np.abs(psi) - 1.0))))
        worst[1] = max(worst[1], float(np.max(np.abs(np.real(psi.conj() * state.riem_grad)))))

    rng = np.random.default_rng(1)
    pr_cg_solve(p, np.exp(2j * np.pi * rng.uniform(size=24)), CgOptions(callback=cb))
    ok = worst[0] <= 1e-12 and worst[1] <= 1e-10
    return "unit modulus and tangency", ok, f"|psi|-1 {worst[0]:.1e}, tangency {worst[1]:.1e}"


def _dinkelbach_check():
    bad = []
    for seed in range(3):
        cfg = replace(ScenarioConfig(), seed=seed, n_ris=8)
        ch = generate_channels(cfg)
        p = build_problem(ch, cfg)
        _, state = dinkelbach_solve(p)
        lams = [t[0] for t in state.trace]
        sol = solve_concealment(ch, cfg, rng=np.random.default_rng(seed))
        if any(b > a for a, b in zip(lams, lams[1:])) or abs(state.f_value) > 1e-6:
            bad.append(seed)
        elif sol.relaxed_bound > sol.gamma_sd + 1e-8:
            bad.append(seed)
    return "Dinkelbach monotone and bounded", not bad, f"failing seeds {bad}" if bad else "3 instances"


def _detection_check():
    p1 = detection_probability(1.0)
    p0 = detection_probability(1e-12)
    grid = detection_probability(np.logspace(-6, 6, 1000))
    ok = p1 == 0.5 and abs(p0 - math.exp(-1)) <= 1e-9 and bool(np.all(np.diff(grid) > 0))
    return "detection probability", ok, f"P(1)={p1!r}"


def _sdp_check():
    rng = np.random.default_rng(7)
    M = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    C = M + M.conj().T
    sol = solve_sdp(SdpProblem(6, C, [(np.eye(6), "=", 1.0)]), tol=1e-10)
    err = abs(sol.objective_value - np.linalg.eigvalsh(C)[0])
    return "SDP minimum eigenvalue", sol.status == OPTIMAL and err <= 1e-7, f"error {err:.1e}"


CHECKS = (_detection_check, _sdp_check, _gradient_check, _manifold_check, _dinkelbach_check)


def run_selftest(out=print):
    results = []
    for check in CHECKS:
        try:
            name, ok, detail = check()
        except Exception as exc:  # a crashing check is a failing check
            name, ok, detail = check.__name__.strip("_"), False, f"{type(exc).__name__}: {exc}"
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        results.append(ok)
    return all(results)
