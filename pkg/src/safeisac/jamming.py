"""Reflection-phase design that suppresses the jammer at the users.

The residual jamming gain ``||J_eff||^2`` is minimized over unit-modulus
reflection phases under the communication-gain floor
``||H_eff||^2 >= G_th``. The floor enters through a penalty
``lambda_r (G_th - ||H_eff||^2)``; each penalized problem is solved by
Polak-Ribiere conjugate gradient on the product of unit circles.

Gradients follow the Wirtinger convention: ``euclidean_gradient`` returns
``g = df/d conj(psi)`` so that the derivative along a direction ``v`` is
``2 Re(g^H v)``. Inside the CG loop the objective is divided by the energy of
its phase-dependent part, which keeps step sizes and stopping thresholds
meaningful whatever the path loss.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InfeasibleError
from .report import SolveReport

UNIT_MODULUS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PenaltyProblem:
    """``f2(psi) = ||J_eff||^2 + lambda_r (G_th - ||H_eff||^2)``.

    With ``clip`` set the bracket is replaced by ``max(0, G_th - ||H_eff||^2)``,
    an exact penalty that stops rewarding gain above the floor.
    """

    ch: object
    g_th: float
    lambda_r: float
    amp_r: float
    clip: bool = False

    def __post_init__(self):
        if not self.lambda_r >= 0:
            raise ValueError("lambda_r must be non-negative")
        if not self.g_th >= 0:
            raise ValueError("g_th must be non-negative")
        L = self.ch.F_c.shape[1]
        if self.ch.G_b.shape[0] != L or self.ch.G_j.shape[0] != L:
            raise DimensionError("F_c, G_b and G_j disagree on the number of RIS elements")

    @property
    def L(self):
        return self.ch.F_c.shape[1]


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    psi_r: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.psi_r)
        if psi.ndim != 1:
            raise DimensionError("psi_r must be a vector")
        if psi.size and np.max(np.abs(np.abs(psi) - 1.0)) > 1e-9:
            raise ValueError("psi_r entries must have unit modulus")


@dataclass
class CgState:
    """Snapshot after an accepted CG step.

    ``riem_grad`` and ``direction`` are in the solver's normalized units;
    ``objective`` is the unnormalized ``f2``.
    """

    point: ManifoldPoint
    riem_grad: np.ndarray
    direction: np.ndarray
    beta_pr: float
    step: float
    objective: float
    iteration: int


@dataclass
class CgOptions:
    grad_tol: float = 1e-6
    f_tol: float = 1e-10
    max_iter: int = 1000
    c1: float = 1e-4
    shrink: float = 0.5
    initial_step: float = 1.0
    max_backtracks: int = 50
    restart_every: int | None = None  # defaults to L
    callback: object = None
    trace: list = field(default_factory=list)


# --- objective and derivatives ---------------------------------------------


def _effective(p, psi):
    F = p.amp_r * p.ch.F_c * psi[None, :]
    return p.ch.H + F @ p.ch.G_b, p.ch.J + F @ p.ch.G_j


def _fro2(M):
    return float(np.real(np.vdot(M, M)))


def _bracket(p, h_gain):
    gap = p.g_th - h_gain
    return max(gap, 0.0) if p.clip else gap


def penalty_objective(p, x):
    psi = np.asarray(x.psi_r if isinstance(x, ManifoldPoint) else x)
    H_eff, J_eff = _effective(p, psi)
    return _fro2(J_eff) + p.lambda_r * _bracket(p, _fro2(H_eff))


def euclidean_gradient(p, x):
    """Wirtinger gradient ``df2 / d conj(psi_r)``.

    ``g_l = amp_r (F_c[:, l]^H J_eff G_j[l, :]^H - lambda_r F_c[:, l]^H H_eff G_b[l, :]^H)``;
    with ``clip`` the second term vanishes wherever the floor holds.
    """
    psi = np.asarray(x.psi_r if isinstance(x, ManifoldPoint) else x)
    H_eff, J_eff = _effective(p, psi)
    Fh = p.ch.F_c.conj().T
    g = np.sum((Fh @ J_eff) * p.ch.G_j.conj(), axis=1)
    lam = p.lambda_r
    if p.clip and p.g_th - _fro2(H_eff) <= 0:
        lam = 0.0
    if lam:
        g = g - lam * np.sum((Fh @ H_eff) * p.ch.G_b.conj(), axis=1)
    return p.amp_r * g


def riemannian_gradient(x, egrad):
    """Project ``egrad`` onto the tangent space of the circle product at ``x``."""
    psi = np.asarray(x.psi_r if isinstance(x, ManifoldPoint) else x)
    egrad = np.asarray(egrad)
    return egrad - np.real(egrad.conj() * psi) * psi


def directional_derivative(p, x, v):
    """``d/dt f2(retract(x, v, t))`` at ``t = 0`` for a tangent ``v``."""
    return 2.0 * float(np.real(np.vdot(euclidean_gradient(p, x), v)))


def retract(x, v, t):
    psi = np.asarray(x.psi_r if isinstance(x, ManifoldPoint) else x)
    if t == 0:
        return ManifoldPoint(psi.copy())
    z = psi + t * np.asarray(v)
    mag = np.abs(z)
    out = psi.copy()
    nz = mag > 0
    out[nz] = z[nz] / mag[nz]
    return ManifoldPoint(out)


def _inner(a, b):
    return float(np.real(np.vdot(a, b)))


def objective_scale(p):
    """Phase-dependent energy ``sum_l |F_c[:, l]|^2 (|G_j[l]|^2 + lambda_r |G_b[l]|^2)``.

    This is the size of the RIS-controlled part of ``f2``; the direct paths
    only shift it by a constant and would otherwise dwarf the gradient.
    """
    ch = p.ch
    col = np.sum(np.abs(ch.F_c) ** 2, axis=0) * p.amp_r**2
    s = float(col @ (np.sum(np.abs(ch.G_j) ** 2, axis=1) + p.lambda_r * np.sum(np.abs(ch.G_b) ** 2, axis=1)))
    return s if s > 0 else 1.0


# --- conjugate gradient ------------------------------------------------------


def pr_cg_solve(p, x0, opts=None):
    """Riemannian Polak-Ribiere CG with Armijo backtracking.

    Returns the final point and a :class:`SolveReport`. The objective trace in
    the report is unnormalized and nonincreasing.
    """
    opts = CgOptions() if opts is None else opts
    psi = np.asarray(x0.psi_r if isinstance(x0, ManifoldPoint) else x0, dtype=complex)
    if psi.shape != (p.L,):
        raise DimensionError(f"starting point has length {psi.shape}, problem expects {p.L}")
    if np.max(np.abs(np.abs(psi) - 1.0)) > UNIT_MODULUS_TOL:
        mag = np.abs(psi)
        psi = np.where(mag > 0, psi / np.where(mag > 0, mag, 1.0), 1.0 + 0j)
    x = ManifoldPoint(psi)
    scale = 1.0 / objective_scale(p)
    restart = opts.restart_every or p.L

    def fval(pt):
        return penalty_objective(p, pt) * scale

    def rgrad(pt):
        return riemannian_gradient(pt, 2.0 * scale * euclidean_gradient(p, pt))

    f = fval(x)
    g = rgrad(x)
    d = -g
    beta = 0.0
    step = 0.0
    report = SolveReport(status="max_iter", objective_trace=[f / scale], residual_trace=[math.sqrt(_inner(g, g))])
    failed_last = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        gnorm = math.sqrt(_inner(g, g))
        if gnorm <= opts.grad_tol:
            report.status = "converged"
            break
        slope = _inner(g, d)
        if slope >= 0 or (it - 1) % restart == 0:
            d = -g
            slope = -gnorm * gnorm
        t = opts.initial_step
        for _ in range(opts.max_backtracks):
            x_new = retract(x, d, t)
            f_new = fval(x_new)
            if f_new <= f + opts.c1 * t * slope:
                break
            t *= opts.shrink
        else:
            if failed_last or np.array_equal(d, -g):
                report.status = "line_search_failure"
                report.message = f"no Armijo step after {opts.max_backtracks} backtracks"
                break
            failed_last = True
            d = -g
            continue
        failed_last = False
        g_new = rgrad(x_new)
        tg = riemannian_gradient(x_new, g)
        beta = _inner(g_new, g_new - tg) / (gnorm * gnorm)
        d = -g_new + beta * riemannian_gradient(x_new, d)
        step = t
        df = f - f_new
        x, f, g = x_new, f_new, g_new
        report.objective_trace.append(f / scale)
        report.residual_trace.append(math.sqrt(_inner(g, g)))
        opts.trace.append((it, f / scale, report.residual_trace[-1], step, beta, p.lambda_r))
        if opts.callback is not None:
            opts.callback(CgState(x, g, d, beta, step, f / scale, it))
        if df <= opts.f_tol:
            report.status = "converged"
            break
    report.iterations = it
    if report.status == "max_iter":
        report.message = f"stopped after {opts.max_iter} iterations"
    report.extra.update(objective=f / scale, grad_norm=math.sqrt(_inner(g, g)), scale=scale)
    return x, report


# --- penalty loop -------------------------------------------------------------


def comm_gain(ch, psi_r, amp_r):
    F = amp_r * ch.F_c * np.asarray(psi_r)[None, :]
    return _fro2(ch.H + F @ ch.G_b)


def jam_gain(ch, psi_r, amp_r):
    F = amp_r * ch.F_c * np.asarray(psi_r)[None, :]
    return _fro2(ch.J + F @ ch.G_j)


def initial_phases(cfg):
    """Uniform random phases drawn from the scenario seed."""
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), 0x505F72]))
    return np.exp(2j * np.pi * rng.uniform(size=cfg.n_ris))


def solve_p2(ch, cfg, x0=None, opts=None, max_rounds=8, growth=10.0, strict=False, amp_r=None):
    """Penalty continuation around :func:`pr_cg_solve`.

    Starts at ``lambda_r = 1`` and multiplies it by ``growth`` while the gain
    floor is violated by more than ``1e-6 G_th``, warm-starting each round.
    After ``max_rounds`` the last iterate is returned with status
    ``infeasible_after_penalty_cap``; ``strict=True`` raises instead.
    """
    amp_r = cfg.amp_r if amp_r is None else amp_r
    x = ManifoldPoint(initial_phases(cfg) if x0 is None else np.asarray(x0.psi_r if isinstance(x0, ManifoldPoint) else x0))
    lam = 1.0
    total = 0
    rounds = []
    objective_trace, residual_trace = [], []
    status = "infeasible_after_penalty_cap"
    for r in range(1, max_rounds + 1):
        p = PenaltyProblem(ch, cfg.g_th, lam, amp_r, clip=cfg.clip_penalty)
        x, rep = pr_cg_solve(p, x, opts)
        total += rep.iterations
        objective_trace += rep.objective_trace
        residual_trace += rep.residual_trace
        violation = cfg.g_th - comm_gain(ch, x.psi_r, amp_r)
        rounds.append({"lambda_r": lam, "inner_status": rep.status, "iterations": rep.iterations, "violation": violation})
        if violation <= 1e-6 * cfg.g_th:
            status = "converged"
            break
        if r < max_rounds:
            lam *= growth
    feasible = status == "converged"
    report = SolveReport(
        status=status,
        iterations=total,
        objective_trace=objective_trace,
        residual_trace=residual_trace,
        feasible=feasible,
        message="" if feasible else f"gain floor still violated by {violation:.3e} at lambda_r={lam:g}",
        extra={"lambda_r": lam, "rounds": rounds},
    )
    if strict and not feasible:
        raise InfeasibleError(report.message, {"psi_r": x.psi_r, "lambda_r": lam, "violation": violation})
    return x, report


def write_trace_csv(trace, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["iteration", "objective", "grad_norm", "step", "beta_pr", "lambda_r"])
        for row in trace:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
