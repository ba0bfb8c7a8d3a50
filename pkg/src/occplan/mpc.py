"""Receding-horizon trajectory planner.

The QP is condensed: states are eliminated through the prediction matrices
and the decision vector stacks one steering input and one slack value per
step, z = [u_0, eps_0, u_1, eps_1, ...]. The slack eps_k is a non-negative
augmented input that relaxes the soft lateral-deviation bounds of the state
it produces, e(k+1):

    e(k+1) >= soft_e_min(k+1) - eps_k
    e(k+1) <= soft_e_max(k+1) + eps_k

One shared eps serves both sides of a step. Hard bounds on e, steering
limits, and terminal equalities on e and dpsi are enforced exactly. The cost
is sum x'Qx + R u^2 + s eps^2 with s defaulting to 3x the largest weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qp import ActiveSetSolver, QpProblem, QpSolution, QpStatus
from .vehicle import ControlInput, LateralState, step

SLACK_WEIGHT_FACTOR = 3.0


class ScheduleInfeasibleError(ValueError):
    """Hard constraint band is empty at some step."""

    def __init__(self, step_index: int, msg: str | None = None):
        self.step_index = step_index
        super().__init__(msg or f"hard bounds cross at step {step_index}")


@dataclass(frozen=True)
class MpcConfig:
    horizon_n: int = 60
    dt: float = 0.1
    state_weights: tuple[float, float, float, float] = (0.5, 5.0, 0.1, 2.0)
    input_weight: float = 10.0
    slack_weight: float | None = None  # None: factor-3 rule
    slack_penalty: str = "quadratic"
    slack_bound: float = math.inf
    steer_limit: float = 0.6

    def __post_init__(self):
        if self.horizon_n < 2:
            raise ValueError("horizon must have at least 2 steps")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if any(w < 0 for w in self.state_weights) or self.input_weight < 0:
            raise ValueError("weights must be non-negative")
        if self.slack_penalty != "quadratic":
            raise ValueError("only the quadratic slack penalty is implemented")
        if self.slack_weight is not None and self.slack_weight <= 0:
            raise ValueError("slack weight must be positive")
        if self.steer_limit <= 0:
            raise ValueError("steer limit must be positive")

    @property
    def effective_slack_weight(self) -> float:
        if self.slack_weight is not None:
            return self.slack_weight
        return SLACK_WEIGHT_FACTOR * max(max(self.state_weights), self.input_weight)


@dataclass(frozen=True)
class ConstraintSchedule:
    """Per-step lateral-deviation bounds (arrays indexed by k-1 for steps
    k = 1..N) plus hard terminal equalities."""

    hard_e_min: np.ndarray
    hard_e_max: np.ndarray
    soft_e_min: np.ndarray
    soft_e_max: np.ndarray
    target_e: float
    target_dpsi: float

    def __post_init__(self):
        for name in ("hard_e_min", "hard_e_max", "soft_e_min", "soft_e_max"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.hard_e_min.size
        if any(getattr(self, f).size != n for f in ("hard_e_max", "soft_e_min", "soft_e_max")):
            raise ValueError("schedule arrays must share one length")
        for k in range(n):
            if self.hard_e_min[k] > self.hard_e_max[k]:
                raise ScheduleInfeasibleError(k + 1)

    @property
    def horizon_n(self) -> int:
        return self.hard_e_min.size

    @staticmethod
    def unconstrained(n: int, target_e: float = 0.0, target_dpsi: float = 0.0):
        inf = np.full(n, np.inf)
        return ConstraintSchedule(hard_e_min=-inf, hard_e_max=inf,
                                  soft_e_min=-inf, soft_e_max=inf,
                                  target_e=target_e, target_dpsi=target_dpsi)

    def shifted(self) -> "ConstraintSchedule":
        """Schedule advanced one step, holding the last step's bounds."""
        def shift(a):
            return np.concatenate([a[1:], a[-1:]])
        return ConstraintSchedule(
            hard_e_min=shift(self.hard_e_min), hard_e_max=shift(self.hard_e_max),
            soft_e_min=shift(self.soft_e_min), soft_e_max=shift(self.soft_e_max),
            target_e=self.target_e, target_dpsi=self.target_dpsi)


@dataclass(frozen=True)
class Trajectory:
    states: tuple[LateralState, ...]   # length N+1 incl. x0
    inputs: tuple[ControlInput, ...]   # length N
    slack: tuple[float, ...]           # length N, eps_k
    slack_cost: tuple[float, ...]      # length N, s * eps_k^2
    feasible: bool
    objective: float = math.nan
    iterations: int = 0
    diagnostic: str | None = None

    @property
    def max_abs_e(self) -> float:
        return max(abs(s.e) for s in self.states)


def prediction_matrices(Ad: np.ndarray, Bd: np.ndarray, n: int):
    """Phi (4n x 4) and Gamma (4n x n) with x_stack = Phi x0 + Gamma u."""
    nx = Ad.shape[0]
    phi = np.zeros((nx * n, nx))
    gamma = np.zeros((nx * n, n))
    a_pow = np.eye(nx)
    for k in range(n):
        a_pow = Ad @ a_pow  # Ad^(k+1)
        phi[nx * k: nx * (k + 1)] = a_pow
    col0 = np.zeros((nx * n, 1))
    for k in range(n):
        if k == 0:
            blk = Bd
        else:
            blk = Ad @ col0[nx * (k - 1): nx * k]
        col0[nx * k: nx * (k + 1)] = blk
    for j in range(n):
        gamma[nx * j:, j: j + 1] = col0[: nx * (n - j)]
    return phi, gamma


def _row_layout(schedule: ConstraintSchedule):
    """C-row order used by build_problem: (kind, step k) tuples."""
    layout = []
    n = schedule.horizon_n
    for k in range(1, n + 1):
        i = k - 1
        if np.isfinite(schedule.hard_e_min[i]) or np.isfinite(schedule.hard_e_max[i]):
            layout.append(("hard_e", k))
        if np.isfinite(schedule.soft_e_min[i]):
            layout.append(("soft_e_lower", k))
        if np.isfinite(schedule.soft_e_max[i]):
            layout.append(("soft_e_upper", k))
    return layout


def build_problem(model: tuple[np.ndarray, np.ndarray], config: MpcConfig,
                  schedule: ConstraintSchedule, x0: LateralState) -> QpProblem:
    """Assemble the condensed QP for one planning cycle."""
    Ad, Bd = model
    n = config.horizon_n
    if schedule.horizon_n != n:
        raise ValueError("schedule length must equal the MPC horizon")
    nx = Ad.shape[0]
    phi, gamma = prediction_matrices(Ad, Bd, n)

    q_diag = np.tile(np.asarray(config.state_weights, dtype=float), n)
    s_w = config.effective_slack_weight
    x_free = phi @ x0.as_array()

    nz = 2 * n
    u_idx = np.arange(0, nz, 2)
    e_idx = np.arange(1, nz, 2)

    # Cost: 1/2 z'Hz + g'z == sum x'Qx + R u^2 + s eps^2 (+ const).
    gq_gamma = gamma * q_diag[:, None]
    H = np.zeros((nz, nz))
    H[np.ix_(u_idx, u_idx)] = 2.0 * (gamma.T @ gq_gamma + config.input_weight * np.eye(n))
    H[e_idx, e_idx] = 2.0 * s_w
    g = np.zeros(nz)
    g[u_idx] = 2.0 * (gamma.T @ (q_diag * x_free))

    e_rows = gamma[0::nx]          # e(k) sensitivity to u, row k-1
    e_free = x_free[0::nx]         # e(k) from the free response
    dpsi_rows = gamma[1::nx]
    dpsi_free = x_free[1::nx]

    c_rows, c_lo, c_hi = [], [], []
    for kind, k in _row_layout(schedule):
        i = k - 1
        row = np.zeros(nz)
        row[u_idx] = e_rows[i]
        if kind == "hard_e":
            c_rows.append(row)
            c_lo.append(schedule.hard_e_min[i] - e_free[i])
            c_hi.append(schedule.hard_e_max[i] - e_free[i])
        elif kind == "soft_e_lower":
            row = row.copy()
            row[e_idx[i]] = 1.0
            c_rows.append(row)
            c_lo.append(schedule.soft_e_min[i] - e_free[i])
            c_hi.append(np.inf)
        else:  # soft_e_upper
            row = row.copy()
            row[e_idx[i]] = -1.0
            c_rows.append(row)
            c_lo.append(-np.inf)
            c_hi.append(schedule.soft_e_max[i] - e_free[i])

    aeq = np.zeros((2, nz))
    aeq[0, u_idx] = e_rows[n - 1]
    aeq[1, u_idx] = dpsi_rows[n - 1]
    beq = np.array([schedule.target_e - e_free[n - 1],
                    schedule.target_dpsi - dpsi_free[n - 1]])

    zl = np.empty(nz)
    zu = np.empty(nz)
    zl[u_idx] = -config.steer_limit
    zu[u_idx] = config.steer_limit
    zl[e_idx] = 0.0
    zu[e_idx] = config.slack_bound

    return QpProblem(
        H=H, g=g, Aeq=aeq, beq=beq,
        C=np.vstack(c_rows) if c_rows else None,
        l=np.array(c_lo) if c_rows else None,
        u=np.array(c_hi) if c_rows else None,
        zl=zl, zu=zu,
    )


def _solution_to_trajectory(model, config: MpcConfig, x0: LateralState,
                            sol: QpSolution, schedule: ConstraintSchedule) -> Trajectory:
    Ad, Bd = model
    n = config.horizon_n
    s_w = config.effective_slack_weight
    feasible = sol.status is QpStatus.OPTIMAL
    diagnostic = None
    if sol.status is QpStatus.PRIMAL_INFEASIBLE:
        diagnostic = _infeasibility_diagnostic(sol, schedule)
    elif sol.status is QpStatus.MAX_ITERATIONS:
        diagnostic = "QP iteration limit reached"

    us = sol.z[0::2]
    eps = sol.z[1::2]
    states = [x0]
    for k in range(n):
        states.append(step(Ad, Bd, states[-1], ControlInput(float(us[k]))))
    return Trajectory(
        states=tuple(states),
        inputs=tuple(ControlInput(float(u)) for u in us),
        slack=tuple(float(e) for e in eps),
        slack_cost=tuple(float(s_w * e * e) for e in eps),
        feasible=feasible,
        objective=sol.objective,
        iterations=sol.iterations,
        diagnostic=diagnostic,
    )


def _infeasibility_diagnostic(sol: QpSolution, schedule: ConstraintSchedule) -> str:
    layout = _row_layout(schedule)
    if not sol.farkas:
        return "infeasible (no certificate)"
    best, best_w = None, 0.0
    for (kind, idx, _sign), c in sol.farkas["coefficients"].items():
        w = abs(c)
        if w > best_w:
            best_w = w
            if kind == 0:
                best = ("terminal equality", "e" if idx == 0 else "dpsi")
            elif kind in (1, 2) and idx < len(layout):
                best = layout[idx]
            elif kind == 3:
                best = ("bound_lower", f"z[{idx}]")
            else:
                best = ("bound_upper", f"z[{idx}]")
    if best is None:
        return "infeasible"
    return f"infeasible: binding {best[0]} at {best[1]}"


class Planner:
    """Owns the warm-started solver for receding-horizon replanning."""

    def __init__(self, model, config: MpcConfig):
        self.model = model
        self.config = config
        self.solver = ActiveSetSolver()

    def plan(self, schedule: ConstraintSchedule, x0: LateralState,
             max_iter: int = 2000) -> Trajectory:
        problem = build_problem(self.model, self.config, schedule, x0)
        sol = self.solver.solve(problem, max_iter=max_iter)
        return _solution_to_trajectory(self.model, self.config, x0, sol, schedule)


def plan(model, config: MpcConfig, schedule: ConstraintSchedule,
         x0: LateralState) -> Trajectory:
    """One-shot plan with a cold solver."""
    return Planner(model, config).plan(schedule, x0)


def slack_cost_series(traj: Trajectory) -> list[float]:
    """Per-step slack cost s * eps(k)^2 along a planned trajectory."""
    return list(traj.slack_cost)


def trajectory_csv(traj: Trajectory, dt: float, speed: float) -> str:
    """CSV export: t, x_station, e, dpsi, beta, omega, delta_f, epsilon, slack_cost."""
    lines = ["t,x_station,e,dpsi,beta,omega,delta_f,epsilon,slack_cost"]
    n = len(traj.inputs)
    for k in range(n + 1):
        s = traj.states[k]
        u = traj.inputs[k].delta_f if k < n else math.nan
        eps = traj.slack[k] if k < n else math.nan
        sc = traj.slack_cost[k] if k < n else math.nan
        lines.append(f"{k * dt:.6f},{k * dt * speed:.6f},{s.e:.9f},{s.dpsi:.9f},"
                     f"{s.beta:.9f},{s.omega:.9f},{u:.9f},{eps:.9f},{sc:.9f}")
    return "\n".join(lines) + "\n"
