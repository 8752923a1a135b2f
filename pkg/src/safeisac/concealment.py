"""Transmission-phase design that hides the target from the malicious detector.

The detector SINR is a ratio of two quadratic forms in the transmission phase
vector ``psi``. It is minimized subject to the ISAC receiver's SINR floor by
lifting ``Y = psi psi^H``, dropping ``rank(Y) = 1`` and keeping ``diag(Y) = 1``,
then running Dinkelbach's method on the relaxed ratio. A rank-one phase vector
is recovered with Gaussian randomization.

Quadratic forms use ``Q_x = A_x A_x^H`` with ``A_x = conj(amp_t diag(f_x) G)``,
so ``||h_x||^2 = psi^H Q_x psi`` for the actual phase vector ``psi``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InfeasibleError
from .report import SolveReport
from .scenario import los_channel
from .sdp import INFEASIBLE, SdpProblem, solve_sdp


@dataclass(frozen=True, eq=False)
class ConcealmentProblem:
    Q_s: np.ndarray
    Q_m: np.ndarray
    Q_r: np.ndarray
    zeta_sq: float
    p_d: float
    p_s: float
    p_c: float
    p_j: float
    sigma_d_sq: float
    d_sq: float
    r_sq: float
    h_rd_sq: float
    gamma_min: float
    p12_uses_pc: bool = False

    @property
    def L(self):
        return self.Q_s.shape[0]

    @property
    def probe_power(self):
        """Probing power used inside the lifted problem."""
        return self.p_c if self.p12_uses_pc else self.p_s

    # --- lifted (matrix) forms ------------------------------------------
    def numerator(self, Y):
        return self.zeta_sq * self.p_d * self.d_sq**2 + self.zeta_sq * self.probe_power * self.d_sq * _tr(self.Q_s, Y)

    def denominator(self, Y):
        return self.sigma_d_sq + self.p_c * _tr(self.Q_m, Y)

    def floor_matrix(self):
        """``G`` in the linearized sensing floor ``Tr(G Y) >= floor_rhs()``."""
        return self.probe_power * self.zeta_sq * self.r_sq * self.Q_s - self.gamma_min * self.p_j * self.Q_r

    def floor_rhs(self):
        return self.gamma_min * (self.sigma_d_sq + self.p_d * self.h_rd_sq) - self.zeta_sq * self.p_d * self.d_sq * self.r_sq

    def floor_violation(self, Y):
        """Relative shortfall of the sensing floor at ``Y`` (0 when met)."""
        lhs = _tr(self.floor_matrix(), Y)
        rhs = self.floor_rhs()
        return max(0.0, (rhs - lhs) / max(abs(rhs), abs(lhs), 1e-300))

    # --- rank-one (vector) forms -----------------------------------------
    def sinr_malicious(self, psi):
        """Detector SINR for phase vectors (rows of a 2-D array allowed)."""
        s = _qf(self.Q_s, psi)
        m = _qf(self.Q_m, psi)
        num = self.zeta_sq * self.p_d * self.d_sq**2 + self.zeta_sq * self.p_s * self.d_sq * s
        return num / (self.sigma_d_sq + self.p_c * m)

    def sinr_isac(self, psi):
        s = _qf(self.Q_s, psi)
        r = _qf(self.Q_r, psi)
        num = self.p_s * self.zeta_sq * self.r_sq * s + self.zeta_sq * self.p_d * self.d_sq * self.r_sq
        return num / (self.sigma_d_sq + self.p_d * self.h_rd_sq + self.p_j * r)


def _tr(Q, Y):
    return float(np.real(np.sum(Q.T * Y)))


def _qf(Q, psi):
    psi = np.asarray(psi)
    if psi.ndim == 1:
        return float(np.real(np.vdot(psi, Q @ psi)))
    return np.real(np.einsum("sl,sl->s", psi.conj(), psi @ Q.T))


def _gram(f, G, amp):
    A = np.conj(amp * f[:, None] * G)
    Q = A @ A.conj().T
    return 0.5 * (Q + Q.conj().T)


def build_problem(ch, cfg):
    L = ch.G_b.shape[0]
    for name in ("f_t", "f_m", "f_r"):
        if getattr(ch, name).shape != (L,):
            raise DimensionError(f"{name} must have length {L}")
    if ch.G_j.shape[0] != L:
        raise DimensionError("G_j has the wrong number of rows")
    return ConcealmentProblem(
        Q_s=_gram(ch.f_t, ch.G_b, cfg.amp_t),
        Q_m=_gram(ch.f_m, ch.G_b, cfg.amp_t),
        Q_r=_gram(ch.f_r, ch.G_j, cfg.amp_t),
        zeta_sq=cfg.zeta_sq,
        p_d=cfg.p_d,
        p_s=cfg.p_s,
        p_c=cfg.p_c,
        p_j=cfg.p_j,
        sigma_d_sq=cfg.sigma_d_sq,
        d_sq=abs(los_channel(ch.los_d)) ** 2,
        r_sq=abs(los_channel(ch.los_r)) ** 2,
        h_rd_sq=abs(ch.h_rd) ** 2,
        gamma_min=cfg.gamma_min,
        p12_uses_pc=cfg.p12_uses_pc,
    )


def _unit_diag_constraints(L):
    cons = []
    for l in range(L):
        E = np.zeros((L, L), dtype=complex)
        E[l, l] = 1.0
        cons.append((E, "=", 1.0))
    return cons


def parametric_sdp(p, lambda_s):
    """Relaxed parametric problem ``min N(Y) - lambda_s D(Y)``.

    Only the ``Y``-dependent part enters the objective matrix; the constant
    ``zeta^2 p_d |d|^4 - lambda_s sigma_d^2`` is added back by the caller.
    """
    C = p.zeta_sq * p.probe_power * p.d_sq * p.Q_s - lambda_s * p.p_c * p.Q_m
    cons = [(p.floor_matrix(), ">=", p.floor_rhs())] + _unit_diag_constraints(p.L)
    return SdpProblem(p.L, C, cons)


def parametric_constant(p, lambda_s):
    return p.zeta_sq * p.p_d * p.d_sq**2 - lambda_s * p.sigma_d_sq


@dataclass
class DinkelbachState:
    """``f_value`` and the trace's F column are normalized by the numerator at
    the starting point so they read as relative quantities."""

    lambda_s: float
    iteration: int
    f_value: float
    trace: list = field(default_factory=list)  # (lambda, F, constraint residual, sdp status)
    lower_bound: float = math.nan
    status: str = "converged"
    Y: np.ndarray | None = None


def feasibility_presolve(p, tol=1e-9):
    """Maximize the sensing-floor slack over ``diag(Y) = 1``.

    Returns the maximizer, which is relaxed-feasible whenever the problem is;
    raises :class:`InfeasibleError` when even the best ``Y`` misses the floor.
    """
    G = p.floor_matrix()
    rhs = p.floor_rhs()
    if not np.any(G):
        if rhs > 0:
            raise InfeasibleError(
                "sensing floor unreachable: the floor does not depend on the phases and is violated",
                {"max_lhs": 0.0, "rhs": rhs},
            )
        return np.eye(p.L, dtype=complex)
    sol = solve_sdp(SdpProblem(p.L, -G, _unit_diag_constraints(p.L)))
    best = _tr(G, sol.Y)
    if best < rhs - tol * max(abs(rhs), abs(best)):
        raise InfeasibleError(
            f"sensing floor gamma_min={p.gamma_min:.4g} unreachable by any phase configuration",
            {"max_lhs": best, "rhs": rhs},
        )
    return sol.Y


def dinkelbach_solve(p, tol=1e-6, max_iter=50, sdp_tol=1e-8):
    """Dinkelbach iterations on the relaxed detector SINR.

    Starts from the ratio at the slack-maximizing point of
    :func:`feasibility_presolve`, so the first ``lambda`` is attainable and the
    ``lambda`` sequence decreases monotonically. Stops once the parametric
    optimum ``F(lambda)`` is within ``tol`` of zero (relative to the starting
    numerator).
    """
    Y = feasibility_presolve(p)
    n_ref = p.numerator(Y)
    lam = n_ref / p.denominator(Y)
    state = DinkelbachState(lambda_s=lam, iteration=0, f_value=math.nan)
    f_dual = math.nan
    for k in range(1, max_iter + 1):
        sol = solve_sdp(parametric_sdp(p, lam), tol=sdp_tol)
        if sol.status == INFEASIBLE:
            raise InfeasibleError("relaxed concealment problem became infeasible", {"lambda": lam, "sdp": sol.message})
        Y = sol.Y
        const = parametric_constant(p, lam)
        F = (p.numerator(Y) - lam * p.denominator(Y)) / n_ref
        f_dual = (const + sol.dual_objective) / n_ref
        state.trace.append((lam, F, p.floor_violation(Y), sol.status))
        state.iteration = k
        state.f_value = F
        if F >= -tol:
            break
        lam = p.numerator(Y) / p.denominator(Y)
        state.lambda_s = lam
    else:
        state.status = "non_convergence"
    state.Y = Y
    # weak duality: N(Y) - lam D(Y) >= f_dual * n_ref for every relaxed-feasible Y, and D >= sigma_d^2
    slack = min(0.0, f_dual) * n_ref / p.sigma_d_sq if f_dual == f_dual else 0.0
    state.lower_bound = state.lambda_s + slack
    return Y, state


@dataclass
class ConcealmentSolution:
    psi_t: np.ndarray
    gamma_sd: float
    gamma_sr: float
    relaxed_bound: float
    report: SolveReport


def unit_modulus(z):
    """Entrywise ``z / |z|`` with zeros mapped to 1."""
    z = np.asarray(z, dtype=complex)
    mag = np.abs(z)
    out = np.ones_like(z)
    nz = mag > 0
    out[nz] = z[nz] / mag[nz]
    return out


def gaussian_randomization(Y, p, n_samples=500, rng=None, relaxed_bound=None):
    """Recover a unit-modulus phase vector from the relaxed solution ``Y``.

    Candidate 0 is the phase projection of the leading eigenvector; the
    remaining ``n_samples`` are phase projections of ``CN(0, Y)`` draws. The
    lowest detector SINR among candidates meeting the sensing floor wins,
    ties going to the lower index. With no feasible candidate, the least
    violating one is returned and the report is flagged.
    """
    rng = np.random.default_rng() if rng is None else rng
    Y = 0.5 * (Y + Y.conj().T)
    w, V = np.linalg.eigh(Y)
    w = np.clip(w, 0.0, None)
    lead = V[:, -1]
    L = Y.shape[0]
    xi = (rng.standard_normal((n_samples, L)) + 1j * rng.standard_normal((n_samples, L))) / math.sqrt(2.0)
    Z = (xi * np.sqrt(w)[None, :]) @ V.T
    cand = unit_modulus(np.vstack([lead[None, :], Z]))

    g_sd = p.sinr_malicious(cand)
    g_sr = p.sinr_isac(cand)
    ok = g_sr >= p.gamma_min
    if relaxed_bound is None:
        relaxed_bound = p.numerator(Y) / p.denominator(Y)
    if np.any(ok):
        idx = int(np.flatnonzero(ok)[np.argmin(g_sd[ok])])
        report = SolveReport(status="converged", iterations=len(cand), feasible=True)
    else:
        idx = int(np.argmax(g_sr))
        report = SolveReport(
            status="no_feasible_candidate",
            iterations=len(cand),
            feasible=False,
            message="no randomized candidate meets the sensing floor; returning the least violating one",
        )
    report.extra["candidate_index"] = idx
    return ConcealmentSolution(
        psi_t=cand[idx],
        gamma_sd=float(g_sd[idx]),
        gamma_sr=float(g_sr[idx]),
        relaxed_bound=float(relaxed_bound),
        report=report,
    )


def solve_concealment(ch, cfg, rng=None, n_samples=500, tol=1e-6, max_iter=50):
    """Relaxation, Dinkelbach and randomization for one channel realization."""
    p = build_problem(ch, cfg)
    Y, state = dinkelbach_solve(p, tol=tol, max_iter=max_iter)
    sol = gaussian_randomization(Y, p, n_samples=n_samples, rng=rng, relaxed_bound=state.lower_bound)
    rep = sol.report
    rep.iterations = state.iteration
    rep.objective_trace = [t[0] for t in state.trace]
    rep.residual_trace = [t[2] for t in state.trace]
    if state.status != "converged" and rep.feasible:
        rep.status = state.status
    rep.extra.update(lambda_s=state.lambda_s, f_value=state.f_value, dinkelbach=state)
    return sol


def write_trace_csv(state, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["iteration", "lambda", "F_lambda", "sdp_status", "constraint_residual"])
        for k, (lam, F, resid, status) in enumerate(state.trace, 1):
            w.writerow([k, repr(lam), repr(F), status, repr(resid)])
