"""Dense convex QP solver.

    minimize   1/2 z' H z + g' z
    subject to Aeq z = beq
               l <= C z <= u
               zl <= z <= zu

Solved by a dual active-set method of the Goldfarb-Idnani family: starting
from the unconstrained minimizer, violated constraints are added one at a
time while dual feasibility is maintained, with Cholesky-backed solves of the
working-set system. This family needs no phase-1 subproblem: primal
infeasibility surfaces as an unbounded dual step and yields a Farkas
certificate. A solver instance remembers its last working set and retries it
first on the next call, which is what makes receding-horizon re-solves cheap.

Solutions carry multipliers per constraint block and are certified
independently by `kkt_residuals`, which shares no code with the solver loop.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import cho_factor, cho_solve

REG = 1e-10  # ridge added to H before factorization; also the PSD test


class QpError(ValueError):
    """Malformed QP (dimension mismatch, indefinite H, crossed bounds)."""


class QpStatus(str, Enum):
    OPTIMAL = "optimal"
    PRIMAL_INFEASIBLE = "primal_infeasible"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class QpProblem:
    H: np.ndarray
    g: np.ndarray
    Aeq: np.ndarray | None = None
    beq: np.ndarray | None = None
    C: np.ndarray | None = None
    l: np.ndarray | None = None
    u: np.ndarray | None = None
    zl: np.ndarray | None = None
    zu: np.ndarray | None = None

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float)
        g = np.asarray(self.g, dtype=float).ravel()
        n = g.size
        if H.shape != (n, n):
            raise QpError(f"H must be {n}x{n}, got {H.shape}")
        if np.max(np.abs(H - H.T)) > 1e-9:
            raise QpError("H must be symmetric within 1e-9")
        object.__setattr__(self, "H", 0.5 * (H + H.T))
        object.__setattr__(self, "g", g)

        Aeq = np.zeros((0, n)) if self.Aeq is None else np.atleast_2d(np.asarray(self.Aeq, float))
        beq = np.zeros(0) if self.beq is None else np.asarray(self.beq, float).ravel()
        if Aeq.shape != (beq.size, n):
            raise QpError("Aeq/beq dimensions inconsistent")
        C = np.zeros((0, n)) if self.C is None else np.atleast_2d(np.asarray(self.C, float))
        l = np.full(C.shape[0], -np.inf) if self.l is None else np.asarray(self.l, float).ravel()
        u = np.full(C.shape[0], np.inf) if self.u is None else np.asarray(self.u, float).ravel()
        if C.shape[1] != n or l.size != C.shape[0] or u.size != C.shape[0]:
            raise QpError("C/l/u dimensions inconsistent")
        if np.any(l > u):
            raise QpError("need l <= u elementwise")
        zl = np.full(n, -np.inf) if self.zl is None else np.asarray(self.zl, float).ravel()
        zu = np.full(n, np.inf) if self.zu is None else np.asarray(self.zu, float).ravel()
        if zl.size != n or zu.size != n:
            raise QpError("bound dimensions inconsistent")
        if np.any(zl > zu):
            raise QpError("need zl <= zu elementwise")
        for name, val in (("Aeq", Aeq), ("beq", beq), ("C", C), ("l", l),
                          ("u", u), ("zl", zl), ("zu", zu)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.g.size

    def objective(self, z: np.ndarray) -> float:
        return float(0.5 * z @ self.H @ z + self.g @ z)


@dataclass(frozen=True)
class QpDuals:
    """Multipliers per constraint block; inequality/bound duals split by side,
    all non-negative; equality duals are free-signed."""

    eq: np.ndarray
    ineq_lower: np.ndarray
    ineq_upper: np.ndarray
    bound_lower: np.ndarray
    bound_upper: np.ndarray


@dataclass(frozen=True)
class QpSolution:
    z: np.ndarray
    duals: QpDuals
    status: QpStatus
    objective: float
    iterations: int
    farkas: dict | None = None  # infeasibility certificate, see solve()


# one-sided row encoding: (kind, block index, sign); normal is sign * row and
# the constraint reads normal . z >= sign * rhs
_EQ, _INEQ_LO, _INEQ_HI, _BND_LO, _BND_HI = range(5)


class _Rows:
    """One-sided view of all constraints with stable integer ids."""

    def __init__(self, qp: QpProblem):
        keys: list[tuple[int, int, float]] = []
        rhs: list[float] = []
        for i in range(qp.beq.size):
            keys.append((_EQ, i, 1.0))
            rhs.append(qp.beq[i])
        for i in range(qp.C.shape[0]):
            if np.isfinite(qp.l[i]):
                keys.append((_INEQ_LO, i, 1.0))
                rhs.append(qp.l[i])
            if np.isfinite(qp.u[i]):
                keys.append((_INEQ_HI, i, -1.0))
                rhs.append(-qp.u[i])
        for i in range(qp.n):
            if np.isfinite(qp.zl[i]):
                keys.append((_BND_LO, i, 1.0))
                rhs.append(qp.zl[i])
            if np.isfinite(qp.zu[i]):
                keys.append((_BND_HI, i, -1.0))
                rhs.append(-qp.zu[i])
        self.keys = keys
        self.rhs = np.array(rhs)
        N = np.zeros((len(keys), qp.n))
        for j, (kind, i, sign) in enumerate(keys):
            if kind == _EQ:
                N[j] = qp.Aeq[i]
            elif kind in (_INEQ_LO, _INEQ_HI):
                N[j] = sign * qp.C[i]
            else:
                N[j, i] = sign
        self.normals = N
        self.n_eq = qp.beq.size

    def kind(self, j: int) -> int:
        return self.keys[j][0]


class ActiveSetSolver:
    """Dual active-set QP solver instance with warm-start memory.

    Instances are single-threaded; create one per planner. Problems and
    solutions are plain values and may be shared freely.
    """

    def __init__(self):
        self._last_active: list[tuple[int, int, float]] = []

    def solve(self, qp: QpProblem, tol: float = 1e-6, max_iter: int = 200) -> QpSolution:
        n = qp.n
        try:
            chol = cho_factor(qp.H + REG * np.eye(n), lower=True)
        except np.linalg.LinAlgError as exc:
            raise QpError("H is not positive semidefinite") from exc

        def hsolve(v):
            return cho_solve(chol, v)

        rows = _Rows(qp)
        x = hsolve(-qp.g)

        act_idx: list[int] = []    # row id of each working constraint
        act_sign: list[float] = []  # extra flip applied when it was added (eq only)
        u_act: list[float] = []    # multipliers, >= 0 for inequality rows
        Nact = np.zeros((0, n))    # working normals (flips applied)
        bact = np.zeros(0)         # working right-hand sides
        B = np.zeros((n, 0))       # H^-1 Nact', columns parallel to act_idx

        eq_queue = list(range(rows.n_eq))
        key_to_id = {k: j for j, k in enumerate(rows.keys)}
        warm = [key_to_id[k] for k in self._last_active if k in key_to_id]

        iterations = 0
        status = None
        farkas = None

        while iterations < max_iter:
            # Candidate selection: equalities first (in order), then violated
            # warm-start rows, then the most violated row (smallest id ties).
            flip = 1.0
            if eq_queue:
                # Equalities always enter the working set (a zero-length step
                # when already satisfied); only a redundant dependent row is
                # skipped, inside the step loop below.
                p = eq_queue.pop(0)
                if rows.normals[p] @ x - rows.rhs[p] > 0:
                    flip = -1.0
            else:
                s_all = rows.normals @ x - rows.rhs
                p = None
                for w in warm:
                    if w not in act_idx and s_all[w] < -tol:
                        p = w
                        break
                if p is None:
                    viol_ids = [j for j in np.flatnonzero(s_all < -tol) if j not in act_idx]
                    if not viol_ids:
                        status = QpStatus.OPTIMAL
                        break
                    p = min(viol_ids, key=lambda j: (s_all[j], j))
            iterations += 1

            n_plus = flip * rows.normals[p]
            b_plus = flip * rows.rhs[p]
            u_plus = 0.0

            while True:
                d = hsolve(n_plus)
                m = len(act_idx)
                if m:
                    M = Nact @ B
                    r = np.linalg.solve(M, B.T @ n_plus)
                    z = d - B @ r
                else:
                    r = np.zeros(0)
                    z = d
                ztn = float(z @ n_plus)
                dtn = float(d @ n_plus)
                s_p = float(n_plus @ x - b_plus)

                # Partial step length: first working inequality whose
                # multiplier would hit zero; ties -> smallest row id.
                t1 = np.inf
                k_block = None
                for j in range(m):
                    if rows.kind(act_idx[j]) == _EQ or r[j] <= 1e-12:
                        continue
                    tj = u_act[j] / r[j]
                    if tj < t1 - 1e-14 or (abs(tj - t1) <= 1e-14 and
                                           (k_block is None or act_idx[j] < act_idx[k_block])):
                        t1 = tj
                        k_block = j

                independent = ztn > 1e-12 * max(dtn, 1e-30)
                t2 = -s_p / ztn if independent else np.inf
                t = min(t1, t2)

                if not np.isfinite(t):
                    if abs(s_p) <= tol * max(1.0, abs(b_plus)):
                        break  # dependent but satisfied: redundant row
                    status = QpStatus.PRIMAL_INFEASIBLE
                    farkas = _farkas_certificate(rows, p, flip, act_idx, act_sign, r, -s_p)
                    break

                if independent:
                    x = x + t * z
                for j in range(m):
                    u_act[j] -= t * r[j]
                u_plus += t

                if independent and t == t2:
                    act_idx.append(p)
                    act_sign.append(flip)
                    u_act.append(u_plus)
                    Nact = np.vstack([Nact, n_plus])
                    bact = np.append(bact, b_plus)
                    B = np.column_stack([B, d])
                    break
                # Blocking constraint leaves the working set; retry candidate.
                act_idx.pop(k_block)
                act_sign.pop(k_block)
                u_act.pop(k_block)
                Nact = np.delete(Nact, k_block, axis=0)
                bact = np.delete(bact, k_block)
                B = np.delete(B, k_block, axis=1)

            if status is QpStatus.PRIMAL_INFEASIBLE:
                break

        if status is None:
            status = QpStatus.MAX_ITERATIONS
        if status is QpStatus.OPTIMAL and act_idx:
            x, u_act = _polish(qp, rows, act_idx, Nact, bact, x, u_act)

        self._last_active = [rows.keys[j] for j in act_idx]
        duals = _collect_duals(qp, rows, act_idx, act_sign, u_act)
        return QpSolution(
            z=x,
            duals=duals,
            status=status,
            objective=qp.objective(x),
            iterations=iterations,
            farkas=farkas,
        )


def solve(qp: QpProblem, tol: float = 1e-6, max_iter: int = 200) -> QpSolution:
    """One-shot solve with a fresh solver instance."""
    return ActiveSetSolver().solve(qp, tol=tol, max_iter=max_iter)


def _farkas_certificate(rows: _Rows, p, flip, act_idx, act_sign, r, violation):
    """Nonnegative combination of constraint rows proving emptiness.

    The candidate row gets weight `flip`, working row j gets -r[j] (times its
    own flip); the combination has zero normal but strictly positive rhs.
    Coefficients may only be negative on equality rows.
    """
    coeffs = {rows.keys[p]: float(flip)}
    for j, idx in enumerate(act_idx):
        coeffs[rows.keys[idx]] = coeffs.get(rows.keys[idx], 0.0) - float(r[j] * act_sign[j])
    return {"coefficients": coeffs, "violation": float(violation)}


def _feas_metric(rows: _Rows, x: np.ndarray) -> float:
    s = rows.normals @ x - rows.rhs
    worst = 0.0
    for j, v in enumerate(s):
        worst = max(worst, abs(v) if rows.kind(j) == _EQ else max(0.0, -v))
    return worst


def _polish(qp, rows, act_idx, Nact, bact, x, u_act):
    """Re-solve the final working-set KKT system (with one refinement pass)
    and keep the result when it is at least as feasible and dual-sane."""
    m = len(act_idx)
    K = np.block([[qp.H + REG * np.eye(qp.n), Nact.T], [Nact, np.zeros((m, m))]])
    b = np.concatenate([-qp.g, bact])
    try:
        sol = np.linalg.solve(K, b)
        sol = sol + np.linalg.solve(K, b - K @ sol)
    except np.linalg.LinAlgError:
        return x, u_act
    x_new = sol[:qp.n]
    u_new = list(-sol[qp.n:])
    for j in range(m):
        if rows.kind(act_idx[j]) != _EQ and u_new[j] < -1e-9:
            return x, u_act
    if _feas_metric(rows, x_new) > _feas_metric(rows, x) + 1e-12:
        return x, u_act
    return x_new, u_new


def _collect_duals(qp: QpProblem, rows: _Rows, act_idx, act_sign, u_act) -> QpDuals:
    eq = np.zeros(qp.beq.size)
    ineq_lo = np.zeros(qp.C.shape[0])
    ineq_hi = np.zeros(qp.C.shape[0])
    bnd_lo = np.zeros(qp.n)
    bnd_hi = np.zeros(qp.n)
    for idx, flip, mult in zip(act_idx, act_sign, u_act):
        kind, i, _sign = rows.keys[idx]
        if kind == _EQ:
            eq[i] += flip * mult
        elif kind == _INEQ_LO:
            ineq_lo[i] += mult
        elif kind == _INEQ_HI:
            ineq_hi[i] += mult
        elif kind == _BND_LO:
            bnd_lo[i] += mult
        else:
            bnd_hi[i] += mult
    return QpDuals(eq=eq, ineq_lower=ineq_lo, ineq_upper=ineq_hi,
                   bound_lower=bnd_lo, bound_upper=bnd_hi)


def kkt_residuals(qp: QpProblem, sol: QpSolution) -> dict[str, float]:
    """Independent KKT check: stationarity, feasibility, complementarity,
    dual sign. Uses only raw problem data and the reported multipliers.

    Convention: Hz + g = Aeq' eq + C'(ineq_lower - ineq_upper)
                          + (bound_lower - bound_upper).
    """
    z, d = sol.z, sol.duals
    grad = qp.H @ z + qp.g
    if qp.beq.size:
        grad = grad - qp.Aeq.T @ d.eq
    if qp.C.shape[0]:
        grad = grad - qp.C.T @ (d.ineq_lower - d.ineq_upper)
    grad = grad - (d.bound_lower - d.bound_upper)
    out = {"stationarity": float(np.max(np.abs(grad), initial=0.0))}

    feas = 0.0
    if qp.beq.size:
        feas = max(feas, float(np.max(np.abs(qp.Aeq @ z - qp.beq))))
    if qp.C.shape[0]:
        cz = qp.C @ z
        feas = max(feas, float(np.max(np.maximum(qp.l - cz, 0.0), initial=0.0)))
        feas = max(feas, float(np.max(np.maximum(cz - qp.u, 0.0), initial=0.0)))
    feas = max(feas, float(np.max(np.maximum(qp.zl - z, 0.0), initial=0.0)))
    feas = max(feas, float(np.max(np.maximum(z - qp.zu, 0.0), initial=0.0)))
    out["feasibility"] = feas

    comp = 0.0
    if qp.C.shape[0]:
        cz = qp.C @ z
        lo = np.where(np.isfinite(qp.l), cz - qp.l, 0.0)
        hi = np.where(np.isfinite(qp.u), qp.u - cz, 0.0)
        comp = max(comp, float(np.max(np.abs(d.ineq_lower * lo), initial=0.0)))
        comp = max(comp, float(np.max(np.abs(d.ineq_upper * hi), initial=0.0)))
    lo = np.where(np.isfinite(qp.zl), z - qp.zl, 0.0)
    hi = np.where(np.isfinite(qp.zu), qp.zu - z, 0.0)
    comp = max(comp, float(np.max(np.abs(d.bound_lower * lo), initial=0.0)))
    comp = max(comp, float(np.max(np.abs(d.bound_upper * hi), initial=0.0)))
    out["complementarity"] = comp

    out["dual_sign"] = float(max(
        np.max(-d.ineq_lower, initial=0.0), np.max(-d.ineq_upper, initial=0.0),
        np.max(-d.bound_lower, initial=0.0), np.max(-d.bound_upper, initial=0.0),
    ))
    return out


def check_kkt(qp: QpProblem, sol: QpSolution, tol: float = 1e-6) -> bool:
    return all(v < tol for v in kkt_residuals(qp, sol).values())


def verify_farkas(qp: QpProblem, sol: QpSolution, tol: float = 1e-6) -> bool:
    """Re-derive the certificate's contradiction from raw problem data."""
    if sol.farkas is None:
        return False
    rows = _Rows(qp)
    key_to_id = {k: j for j, k in enumerate(rows.keys)}
    combo_n = np.zeros(qp.n)
    combo_b = 0.0
    for key, c in sol.farkas["coefficients"].items():
        j = key_to_id[tuple(key)]
        if rows.kind(j) != _EQ and c < -1e-9:
            return False
        combo_n += c * rows.normals[j]
        combo_b += c * rows.rhs[j]
    scale = max(1.0, max(abs(c) for c in sol.farkas["coefficients"].values()))
    return bool(np.max(np.abs(combo_n)) < 1e-6 * scale and combo_b >= tol * 0.1)


def dump_problem(qp: QpProblem) -> str:
    """Plain-text dump: header with dimensions, then each block row-major."""
    buf = io.StringIO()
    buf.write(f"qp n={qp.n} me={qp.beq.size} mi={qp.C.shape[0]}\n")

    def block(name, arr):
        arr = np.atleast_2d(arr)
        buf.write(f"{name} {arr.shape[0]} {arr.shape[1]}\n")
        for row in arr:
            buf.write(" ".join(f"{v:.17g}" for v in row) + "\n")

    for name in ("H", "g", "Aeq", "beq", "C", "l", "u", "zl", "zu"):
        block(name, getattr(qp, name))
    return buf.getvalue()
