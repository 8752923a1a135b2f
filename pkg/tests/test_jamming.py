import csv
from dataclasses import replace

import numpy as np
import pytest

from conftest import make, unit_phases
from safeisac.channel import StarRisState, evaluate_metrics
from safeisac.errors import DimensionError, InfeasibleError
from safeisac.jamming import (
    CgOptions,
    ManifoldPoint,
    PenaltyProblem,
    comm_gain,
    directional_derivative,
    euclidean_gradient,
    initial_phases,
    jam_gain,
    objective_scale,
    penalty_objective,
    pr_cg_solve,
    retract,
    riemannian_gradient,
    solve_p2,
    write_trace_csv,
)
from safeisac.scenario import ChannelSet, LosGeometry

GRID64 = np.exp(2j * np.pi * np.arange(64) / 64)
GRID_L2 = np.array([[a, b] for a in GRID64 for b in GRID64])


def _tangent(rng, psi):
    return riemannian_gradient(psi, rng.standard_normal(psi.size) + 1j * rng.standard_normal(psi.size))


def _scalar_channels(F=1.0, Gj=1.0, J=0.0):
    los = LosGeometry(alpha=0.1, beta=0.0, phi=0.0)
    c = lambda v: np.array([[v]], complex)  # noqa: E731
    return ChannelSet(
        H=c(0.0), J=c(J), F_c=c(F), G_b=c(0.0), G_j=c(Gj), f_r=np.ones(1, complex), f_t=np.ones(1, complex),
        f_m=np.ones(1, complex), h_rd=0j, los_d=los, los_r=los,
    )


def _fd(p, psi, v, h=1e-3):
    # five-point central stencil along the retraction curve
    f = lambda t: penalty_objective(p, retract(psi, v, t))  # noqa: E731
    return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)


def test_objective_without_penalty_is_jam_gain(rng):
    cfg, ch = make(seed=0)
    psi_r = unit_phases(rng, cfg.n_ris)
    p = PenaltyProblem(ch, cfg.g_th, 0.0, cfg.amp_r)
    m = evaluate_metrics(ch, StarRisState.from_config(np.ones(cfg.n_ris), psi_r, cfg), cfg)
    assert penalty_objective(p, ManifoldPoint(psi_r)) == pytest.approx(m.jam_gain, rel=1e-12)


def test_objective_zero_jammer(rng):
    cfg, ch = make(seed=0, n_ris=6)
    ch0 = replace(ch, J=np.zeros_like(ch.J), G_j=np.zeros_like(ch.G_j))
    assert penalty_objective(PenaltyProblem(ch0, 1.0, 0.0, 0.5), unit_phases(rng, 6)) == 0.0


def test_objective_matches_naive_evaluation(rng):
    cfg, ch = make(seed=1, n_ris=5, n_users=2, n_tx=3, n_jam=2)
    psi = unit_phases(rng, 5)
    lam, a = 3.0, cfg.amp_r
    p = PenaltyProblem(ch, 2e-8, lam, a)
    K, N, Nj, L = ch.dims
    jg = sum(
        abs(ch.J[k, n] + sum(a * ch.F_c[k, l] * psi[l] * ch.G_j[l, n] for l in range(L))) ** 2
        for k in range(K) for n in range(Nj)
    )
    hg = sum(
        abs(ch.H[k, n] + sum(a * ch.F_c[k, l] * psi[l] * ch.G_b[l, n] for l in range(L))) ** 2
        for k in range(K) for n in range(N)
    )
    assert penalty_objective(p, psi) == pytest.approx(jg + lam * (2e-8 - hg), rel=1e-12)


def test_clipped_penalty():
    cfg, ch = make(seed=2, n_ris=8)
    psi = initial_phases(cfg)
    h = comm_gain(ch, psi, cfg.amp_r)
    loose = PenaltyProblem(ch, 0.5 * h, 10.0, cfg.amp_r, clip=True)
    assert penalty_objective(loose, psi) == pytest.approx(jam_gain(ch, psi, cfg.amp_r), rel=1e-12)
    tight = PenaltyProblem(ch, 2 * h, 10.0, cfg.amp_r, clip=True)
    assert penalty_objective(tight, psi) == pytest.approx(jam_gain(ch, psi, cfg.amp_r) + 10 * h, rel=1e-12)


def test_gradient_vanishes_without_ris_path(rng):
    cfg, ch = make(seed=0, n_ris=6)
    ch0 = replace(ch, F_c=np.zeros_like(ch.F_c))
    g = euclidean_gradient(PenaltyProblem(ch0, cfg.g_th, 1.0, cfg.amp_r), unit_phases(rng, 6))
    assert not np.any(g)


def test_scalar_gradient():
    p = PenaltyProblem(_scalar_channels(), 0.0, 0.0, 1.0)
    psi = np.array([1.0 + 0j])
    # f = |psi|^2, so df/dconj(psi) = psi
    np.testing.assert_allclose(euclidean_gradient(p, psi), psi)
    v = np.array([1j])
    assert directional_derivative(p, psi, v) == pytest.approx(_fd(p, psi, v), abs=1e-9)


@pytest.mark.parametrize("clip", [False, True])
def test_gradient_matches_finite_differences(clip, rng):
    cfg, ch = make(seed=3, n_ris=16)
    h = comm_gain(ch, initial_phases(cfg), cfg.amp_r)
    p = PenaltyProblem(ch, 1.5 * h if clip else cfg.g_th, 2.0, cfg.amp_r, clip=clip)
    for _ in range(20):
        psi = unit_phases(rng, 16)
        v = _tangent(rng, psi)
        an = directional_derivative(p, psi, v)
        assert abs(an - _fd(p, psi, v)) <= 1e-6 * abs(an)


def test_riemannian_gradient_properties(rng):
    psi = unit_phases(rng, 10)
    np.testing.assert_allclose(riemannian_gradient(psi, 2.5 * psi), 0, atol=1e-15)
    t = _tangent(rng, psi)
    np.testing.assert_allclose(riemannian_gradient(psi, t), t, atol=1e-15)
    out = riemannian_gradient(psi, rng.standard_normal(10) + 1j * rng.standard_normal(10))
    assert np.max(np.abs(np.real(psi.conj() * out))) <= 1e-12


def test_retraction(rng):
    psi = unit_phases(rng, 12)
    v = _tangent(rng, psi)
    np.testing.assert_array_equal(retract(psi, v, 0.0).psi_r, psi)
    for t in (1e-3, 0.7, 50.0):
        assert np.max(np.abs(np.abs(retract(psi, v, t).psi_r) - 1)) <= 1e-15
    ts = np.logspace(-5, -2, 6)
    err = [np.linalg.norm(retract(psi, v, t).psi_r - (psi + t * v)) for t in ts]
    slope = np.polyfit(np.log(ts), np.log(err), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.1)


def test_retraction_zero_denominator():
    psi = np.array([1.0 + 0j, 1j])
    out = retract(psi, np.array([-1.0 + 0j, 0j]), 1.0)
    np.testing.assert_array_equal(out.psi_r, psi)


def test_manifold_point_validation():
    with pytest.raises(ValueError):
        ManifoldPoint(np.array([1.0, 0.5]))
    with pytest.raises(DimensionError):
        ManifoldPoint(np.ones((2, 2)))


def test_stationary_start_returns_in_one_iteration():
    # F_c = 0: objective constant, gradient zero everywhere
    cfg, ch = make(seed=0, n_ris=6)
    ch0 = replace(ch, F_c=np.zeros_like(ch.F_c))
    psi = initial_phases(replace(cfg, n_ris=6))
    x, rep = pr_cg_solve(PenaltyProblem(ch0, cfg.g_th, 1.0, cfg.amp_r), psi)
    np.testing.assert_array_equal(x.psi_r, psi)
    assert rep.iterations == 1
    assert rep.status == "converged"


def test_cg_invariants_every_step():
    cfg, ch = make(seed=4, n_ris=24)
    p = PenaltyProblem(ch, cfg.g_th, 1.0, cfg.amp_r)
    seen = []

    def cb(state):
        psi = state.point.psi_r
        assert np.max(np.abs(np.abs(psi) - 1)) <= 1e-12
        assert np.max(np.abs(np.real(psi.conj() * state.riem_grad))) <= 1e-10
        assert np.max(np.abs(np.real(psi.conj() * state.direction))) <= 1e-10
        seen.append(state.objective)

    _, rep = pr_cg_solve(p, initial_phases(cfg), CgOptions(callback=cb))
    assert seen
    assert all(b <= a for a, b in zip(rep.objective_trace, rep.objective_trace[1:]))


def test_cg_max_iter_flag():
    cfg, ch = make(seed=4, n_ris=24)
    _, rep = pr_cg_solve(PenaltyProblem(ch, cfg.g_th, 1.0, cfg.amp_r), initial_phases(cfg), CgOptions(max_iter=3))
    assert rep.status == "max_iter"
    assert rep.iterations == 3


def test_cg_rejects_wrong_length():
    cfg, ch = make(seed=0, n_ris=8)
    with pytest.raises(DimensionError):
        pr_cg_solve(PenaltyProblem(ch, cfg.g_th, 1.0, cfg.amp_r), np.ones(5, complex))


@pytest.mark.parametrize("seed", range(10))
def test_cg_grid_oracle_l2(seed):
    cfg, ch = make(seed=seed, n_ris=2)
    p = PenaltyProblem(ch, cfg.g_th, 1.0, cfg.amp_r)
    s = 1.0 / objective_scale(p)
    best = min(penalty_objective(p, g) for g in GRID_L2) * s
    x, _ = pr_cg_solve(p, initial_phases(cfg))
    assert penalty_objective(p, x) * s <= best + 1e-3 + 0.05 * abs(best)


def test_cg_beats_random_start():
    wins = 0
    for seed in range(20):
        cfg, ch = make(seed=seed, n_ris=48)
        x0 = initial_phases(cfg)
        x, _ = solve_p2(ch, cfg, x0=x0)
        wins += jam_gain(ch, x.psi_r, cfg.amp_r) < jam_gain(ch, x0, cfg.amp_r)
    assert wins >= 19


def test_p2_vacuous_floor():
    cfg, ch = make(seed=0, n_ris=16)
    x, rep = solve_p2(ch, replace(cfg, g_th=0.0))
    assert rep.feasible
    assert rep.extra["lambda_r"] == 1.0
    assert len(rep.extra["rounds"]) == 1


def test_p2_half_of_achieved_gain_is_one_round():
    cfg, ch = make(seed=1, n_ris=16)
    x, _ = solve_p2(ch, replace(cfg, g_th=0.0))
    target = 0.5 * comm_gain(ch, x.psi_r, cfg.amp_r)
    x2, rep = solve_p2(ch, replace(cfg, g_th=target))
    assert rep.feasible and len(rep.extra["rounds"]) == 1
    assert comm_gain(ch, x2.psi_r, cfg.amp_r) >= target


def _max_comm_gain(ch, cfg):
    # maximize ||H_eff||^2 with the same machinery: zero jammer, huge floor
    ch0 = replace(ch, J=np.zeros_like(ch.J), G_j=np.zeros_like(ch.G_j))
    p = PenaltyProblem(ch0, 0.0, 1.0, cfg.amp_r)
    best = 0.0
    for k in range(5):
        x, _ = pr_cg_solve(p, unit_phases(np.random.default_rng(k), cfg.n_ris))
        best = max(best, comm_gain(ch, x.psi_r, cfg.amp_r))
    return best


def test_p2_unreachable_floor():
    cfg, ch = make(seed=2, n_ris=8)
    cfg = replace(cfg, g_th=1.5 * _max_comm_gain(ch, cfg))
    x, rep = solve_p2(ch, cfg)
    assert rep.status == "infeasible_after_penalty_cap"
    assert not rep.feasible
    assert len(rep.extra["rounds"]) == 8
    with pytest.raises(InfeasibleError):
        solve_p2(ch, cfg, strict=True)


def test_p2_escalates_penalty_when_needed():
    cfg, ch = make(seed=3, n_ris=16)
    top = _max_comm_gain(ch, cfg)
    x, rep = solve_p2(ch, replace(cfg, g_th=0.97 * top))
    lams = [r["lambda_r"] for r in rep.extra["rounds"]]
    assert lams == [10.0**k for k in range(len(lams))]
    if rep.feasible:
        assert comm_gain(ch, x.psi_r, cfg.amp_r) >= 0.97 * top * (1 - 1e-6)


def test_trace_csv(tmp_path):
    cfg, ch = make(seed=0, n_ris=8)
    opts = CgOptions()
    pr_cg_solve(PenaltyProblem(ch, cfg.g_th, 1.0, cfg.amp_r), initial_phases(cfg), opts)
    path = tmp_path / "cg.csv"
    write_trace_csv(opts.trace, path)
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["iteration", "objective", "grad_norm", "step", "beta_pr", "lambda_r"]
    assert len(rows) == len(opts.trace) + 1
