"""Dense primal-dual interior-point solver for small complex SDPs.

Solves::

    minimize    Re Tr(C Y)
    subject to  Re Tr(A_i Y)  (<= | >= | =)  b_i,   Y Hermitian PSD

natively over Hermitian matrices (no real embedding). Inequalities get
nonnegative slacks, so the cone is ``H^n_+ x R^p_+``. The search direction is
HKM with a Mehrotra predictor-corrector; the starting point is the usual
infeasible ``X = xi I, Z = eta I``.

Each row ``(A_i, b_i)`` is divided by ``max(||A_i||_F, |b_i|)`` and ``C`` by its norm before
iterating, so tolerances are relative and the physical scale of the data
(channel gains around 1e-12 are typical) does not matter. Constraints
touching a single diagonal entry get a closed-form Schur complement; with
``n`` such constraints one iteration stays O(n^3).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

_SENSES = {"<=": "<=", "≤": "<=", ">=": ">=", "≥": ">=", "=": "=", "==": "="}

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITER = "max_iter"


@dataclass
class SdpProblem:
    dim: int
    objective: np.ndarray
    constraints: list = field(default_factory=list)  # (A_i, sense, b_i)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        self.objective = np.asarray(self.objective, dtype=complex)
        if self.objective.shape != (self.dim, self.dim):
            raise ValueError("objective has the wrong shape")
        cons = []
        for A, sense, b in self.constraints:
            A = np.asarray(A, dtype=complex)
            if A.shape != (self.dim, self.dim):
                raise ValueError("constraint matrix has the wrong shape")
            if sense not in _SENSES:
                raise ValueError(f"unknown constraint sense {sense!r}")
            cons.append((A, _SENSES[sense], float(b)))
        self.constraints = cons


@dataclass
class SdpSolution:
    Y: np.ndarray
    objective_value: float
    status: str
    kkt_residuals: tuple  # (primal, dual, gap), relative, on the scaled problem
    dual_objective: float = math.nan
    y: np.ndarray | None = None
    iterations: int = 0
    trace: list = field(default_factory=list)
    message: str = ""


def _hermitize(M, what):
    M = np.asarray(M, dtype=complex)
    skew = np.max(np.abs(M - M.conj().T)) if M.size else 0.0
    if skew > 1e-8 * max(1.0, np.max(np.abs(M))):
        warnings.warn(f"{what} is not Hermitian (skew {skew:.3g}); symmetrizing", RuntimeWarning, stacklevel=3)
    return 0.5 * (M + M.conj().T)


def _single_diag(A):
    """Index of the only nonzero entry if it sits on the diagonal, else None."""
    nz = np.flatnonzero(A)
    if nz.size != 1:
        return None
    i, j = divmod(int(nz[0]), A.shape[0])
    return i if i == j else None


def _max_step_psd(X, dX):
    try:
        c = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return 0.0
    ci = np.linalg.solve(c, np.eye(len(X)))
    S = ci @ dX @ ci.conj().T
    lam = np.linalg.eigvalsh(0.5 * (S + S.conj().T))[0]
    return math.inf if lam >= 0 else -1.0 / lam


def _max_step_lp(x, dx):
    neg = dx < 0
    if not np.any(neg):
        return math.inf
    return float(np.min(-x[neg] / dx[neg]))


def _herm(M):
    return 0.5 * (M + M.conj().T)


class _Scaled:
    """Normalized copy of a problem with operator helpers."""

    def __init__(self, n, C, rows, b, ineq):
        self.n = n
        self.C = C
        self.b = b
        self.m = len(b)
        self.ineq = np.asarray(ineq, dtype=int)
        diag_idx, diag_val, dense_pos, dense = [], [], [], []
        self.diag_pos = []
        for i, A in enumerate(rows):
            k = _single_diag(A)
            if k is None:
                dense_pos.append(i)
                dense.append(A)
            else:
                self.diag_pos.append(i)
                diag_idx.append(k)
                diag_val.append(A[k, k].real)
        self.diag_pos = np.asarray(self.diag_pos, dtype=int)
        self.kd = np.asarray(diag_idx, dtype=int)
        self.vd = np.asarray(diag_val, dtype=float)
        self.dense_pos = np.asarray(dense_pos, dtype=int)
        self.Ad = np.asarray(dense, dtype=complex).reshape(len(dense), n, n)

    def A(self, W):
        out = np.empty(self.m)
        if self.diag_pos.size:
            out[self.diag_pos] = self.vd * np.real(W[self.kd, self.kd])
        if self.dense_pos.size:
            out[self.dense_pos] = np.real(np.einsum("iab,ba->i", self.Ad, W))
        return out

    def AT(self, y):
        S = np.zeros((self.n, self.n), dtype=complex)
        if self.dense_pos.size:
            S += np.einsum("i,iab->ab", y[self.dense_pos], self.Ad)
        if self.diag_pos.size:
            np.add.at(S, (self.kd, self.kd), self.vd * y[self.diag_pos])
        return S

    def schur(self, X, Zi, s, z):
        M = np.zeros((self.m, self.m))
        dp, gp = self.diag_pos, self.dense_pos
        if dp.size:
            k = self.kd
            M[np.ix_(dp, dp)] = np.outer(self.vd, self.vd) * np.real(X[np.ix_(k, k)] * Zi[np.ix_(k, k)].T)
        if gp.size:
            W = X @ self.Ad @ Zi
            M[np.ix_(gp, gp)] = np.real(np.einsum("iab,jba->ij", self.Ad, W))
            if dp.size:
                P = Zi @ self.Ad @ X
                cross = self.vd[None, :] * np.real(P[:, self.kd, self.kd])
                M[np.ix_(gp, dp)] = cross
                M[np.ix_(dp, gp)] = cross.T
        if self.ineq.size:
            M[self.ineq, self.ineq] += s / z
        return 0.5 * (M + M.T)


def solve_sdp(p, tol=1e-7, max_iter=100):
    """Solve an :class:`SdpProblem` to relative accuracy ``tol``.

    ``status`` is ``"optimal"`` when the relative primal residual, dual
    residual and duality gap of the normalized problem are all ``<= tol``.
    ``"infeasible"`` comes with a Farkas-type dual ray; ``"max_iter"``
    returns the last iterate. ``Y`` is always Hermitian with
    ``lambda_min(Y) >= -1e-8``.
    """
    n = p.dim
    C0 = _hermitize(p.objective, "objective")
    rows, b, ineq, sign, norms = [], [], [], [], []
    for idx, (A, sense, bi) in enumerate(p.constraints):
        A = _hermitize(A, f"constraint {idx}")
        a_norm = np.linalg.norm(A)
        if a_norm == 0.0:
            ok = (sense == "<=" and 0.0 <= bi) or (sense == ">=" and 0.0 >= bi) or (sense == "=" and bi == 0.0)
            if not ok:
                return _trivially_infeasible(n, C0, idx)
            rows.append(None)
            continue
        # a row whose right-hand side dwarfs its matrix is scaled by |b| instead
        nrm = max(a_norm, abs(bi))
        s = -1.0 if sense == ">=" else 1.0
        if sense != "=":
            ineq.append(len(b))
        rows.append(s * A / nrm)
        b.append(s * bi / nrm)
        sign.append(s)
        norms.append(nrm)
    kept = [r for r in rows if r is not None]
    kept_map = [i for i, r in enumerate(rows) if r is not None]
    b = np.asarray(b, dtype=float)
    c_norm = np.linalg.norm(C0)
    c_scale = c_norm if c_norm > 0 else 1.0
    prob = _Scaled(n, C0 / c_scale, kept, b, ineq)
    res = _ipm(prob, tol, max_iter)

    X = res["X"]
    y_scaled = res["y"]
    y = np.zeros(len(p.constraints))
    if kept:
        y[kept_map] = c_scale * y_scaled * np.asarray(sign) / np.asarray(norms)
    return SdpSolution(
        Y=X,
        objective_value=float(np.real(np.sum(C0.T * X))),
        status=res["status"],
        kkt_residuals=res["residuals"],
        dual_objective=c_scale * res["dobj"],
        y=y,
        iterations=res["iterations"],
        trace=[dict(t, pobj=c_scale * t["pobj"], dobj=c_scale * t["dobj"]) for t in res["trace"]],
        message=res["message"],
    )


def _trivially_infeasible(n, C, idx):
    return SdpSolution(
        Y=np.eye(n, dtype=complex),
        objective_value=float(np.real(np.trace(C))),
        status=INFEASIBLE,
        kkt_residuals=(math.inf, math.nan, math.nan),
        message=f"constraint {idx} has a zero matrix and an unsatisfiable right-hand side",
    )


def _ipm(P, tol, max_iter):
    n, m = P.n, P.m
    p = P.ineq.size
    nu = n + p
    row_norms = np.ones(m)
    c_norm = np.linalg.norm(P.C)
    xi = max(10.0, math.sqrt(n), n * float(np.max((1.0 + np.abs(P.b)) / (1.0 + row_norms))) if m else 10.0)
    eta = max(10.0, math.sqrt(n), 1.0, c_norm)
    X = xi * np.eye(n, dtype=complex)
    Z = eta * np.eye(n, dtype=complex)
    y = np.zeros(m)
    s = np.full(p, xi)
    z = np.full(p, eta)
    I = np.eye(n)
    trace = []
    status, message = MAX_ITER, "iteration limit reached"
    it = 0
    resid = (math.inf, math.inf, math.inf)
    dobj = math.nan

    def B(v):
        out = np.zeros(m)
        if p:
            out[P.ineq] = v
        return out

    for it in range(1, max_iter + 1):
        rp = P.b - P.A(X) - B(s)
        Rd = P.C - P.AT(y) - Z
        rdl = -y[P.ineq] - z if p else np.zeros(0)
        pobj = float(np.real(np.vdot(P.C, X)))
        dobj = float(P.b @ y)
        mu = (float(np.real(np.vdot(X, Z))) + float(s @ z)) / nu
        pinf = float(np.max(np.abs(rp) / (1.0 + np.abs(P.b)))) if m else 0.0
        dinf = (np.linalg.norm(Rd) + np.linalg.norm(rdl)) / (1.0 + c_norm)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        resid = (pinf, dinf, gap)
        trace.append({"iteration": it - 1, "pobj": pobj, "dobj": dobj, "pinf": pinf, "dinf": dinf, "gap": gap, "mu": mu})
        if pinf <= tol and dinf <= tol and gap <= tol:
            status, message = OPTIMAL, "converged"
            break
        if m and dobj > 0 and _is_farkas_ray(P, y, dobj, tol):
            status, message = INFEASIBLE, "dual ray certifies primal infeasibility"
            break

        try:
            Zi = np.linalg.inv(Z)
            Zi = _herm(Zi)
            M = P.schur(X, Zi, s, z)
            Mchol = np.linalg.cholesky(M + 1e-14 * np.trace(M) / max(m, 1) * np.eye(m)) if m else None
        except np.linalg.LinAlgError:
            message = "Schur complement not positive definite"
            break

        def direction(Rc, rcl):
            rhs = rp - P.A(Rc @ Zi) + P.A(X @ Rd @ Zi)
            if p:
                rhs = rhs - B(rcl / z) + B(s / z * rdl)
            dy = _cho_solve(Mchol, rhs) if m else np.zeros(0)
            dZ = Rd - P.AT(dy)
            dX = _herm((Rc - X @ dZ) @ Zi)
            dz = rdl - dy[P.ineq] if p else np.zeros(0)
            ds = (rcl - s * dz) / z if p else np.zeros(0)
            return dX, dy, dZ, ds, dz

        XZ = X @ Z
        # predictor
        dXa, dya, dZa, dsa, dza = direction(-XZ, -s * z)
        ap = min(1.0, _max_step_psd(X, dXa), _max_step_lp(s, dsa))
        ad = min(1.0, _max_step_psd(Z, dZa), _max_step_lp(z, dza))
        mu_aff = (float(np.real(np.vdot(X + ap * dXa, Z + ad * dZa))) + float((s + ap * dsa) @ (z + ad * dza))) / nu
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0
        # corrector
        Rc = sigma * mu * I - XZ - dXa @ dZa
        rcl = sigma * mu - s * z - dsa * dza
        dX, dy, dZ, ds, dz = direction(Rc, rcl)

        ap = _max_step_psd(X, dX)
        ap = min(ap, _max_step_lp(s, ds))
        ad = _max_step_psd(Z, dZ)
        ad = min(ad, _max_step_lp(z, dz))
        gamma = 0.9 + 0.09 * min(1.0, ap, ad)
        ap = min(1.0, gamma * ap)
        ad = min(1.0, gamma * ad)
        if ap < 1e-12 and ad < 1e-12:
            message = "step length collapsed"
            break
        X = _herm(X + ap * dX)
        s = s + ap * ds
        y = y + ad * dy
        Z = _herm(Z + ad * dZ)
        z = z + ad * dz
    else:
        it = max_iter

    return {
        "X": X,
        "y": y,
        "dobj": dobj,
        "status": status,
        "residuals": resid,
        "iterations": it,
        "trace": trace,
        "message": message,
    }


def _cho_solve(c, rhs):
    w = np.linalg.solve(c, rhs)
    return np.linalg.solve(c.T, w)


def _is_farkas_ray(P, y, dobj, tol):
    # y / (b^T y) with -A^T y PSD and slack duals <= 0 proves A(X) + Bs = b has no solution
    if dobj < 1e3:
        return False
    yb = y / dobj
    S = -P.AT(yb)
    lam = np.linalg.eigvalsh(_herm(S))[0]
    scale = max(1.0, np.linalg.norm(S))
    if lam < -tol * scale:
        return False
    return not (P.ineq.size and np.max(yb[P.ineq]) > tol * scale)


# --- debug dump --------------------------------------------------------------

def _write_matrix(f, M):
    for row in M:
        f.write(" ".join(f"{float(v.real)!r},{float(v.imag)!r}" for v in row) + "\n")


def dump_problem(p, path):
    """Write ``p`` as text: ``dim m`` header, the objective, then each
    constraint as a ``sense b`` line followed by its rows (``re,im`` pairs)."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{p.dim} {len(p.constraints)}\n")
        _write_matrix(f, p.objective)
        for A, sense, b in p.constraints:
            f.write(f"{sense} {float(b)!r}\n")
            _write_matrix(f, A)


def load_problem(path):
    with open(path, encoding="utf-8") as f:
        lines = [ln.rstrip("\n") for ln in f]
    dim, m = (int(t) for t in lines[0].split())

    def read(start):
        M = np.empty((dim, dim), dtype=complex)
        for i in range(dim):
            for j, tok in enumerate(lines[start + i].split()):
                re_, im_ = tok.split(",")
                M[i, j] = complex(float(re_), float(im_))
        return M

    C = read(1)
    pos = 1 + dim
    cons = []
    for _ in range(m):
        sense, b = lines[pos].split()
        cons.append((read(pos + 1), sense, float(b)))
        pos += 1 + dim
    return SdpProblem(dim, C, cons)
