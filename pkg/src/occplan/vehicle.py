"""Linear single-track lateral dynamics in path coordinates.

State x = [e, dpsi, beta, omega]:
    e      lateral deviation from the reference path, m
    dpsi   heading error, rad
    beta   side slip angle, rad
    omega  yaw rate, rad/s
Input u = front steering angle delta_f, rad. Rear steering is fixed at 0 and
has no input path. Longitudinal speed v is constant over a planning horizon;
the reference path is straight (curvature 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DELTA_MAX_DEFAULT = 0.6  # rad


@dataclass(frozen=True)
class SingleTrackParams:
    mass: float = 1500.0       # kg
    yaw_inertia: float = 2500.0  # kg m^2
    lf: float = 1.2            # m, CoG to front axle
    lr: float = 1.5            # m, CoG to rear axle
    cf: float = 80000.0        # N/rad
    cr: float = 80000.0        # N/rad
    v: float = 10.0            # m/s, constant over the horizon

    def __post_init__(self):
        for name in ("mass", "yaw_inertia", "lf", "lr", "cf", "cr"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.v <= 0.5:
            raise ValueError("model is singular for v <= 0.5 m/s")


@dataclass(frozen=True)
class LateralState:
    e: float = 0.0
    dpsi: float = 0.0
    beta: float = 0.0
    omega: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.e, self.dpsi, self.beta, self.omega])

    @staticmethod
    def from_array(x) -> "LateralState":
        return LateralState(float(x[0]), float(x[1]), float(x[2]), float(x[3]))


@dataclass(frozen=True)
class ControlInput:
    delta_f: float = 0.0


def continuous_matrices(p: SingleTrackParams) -> tuple[np.ndarray, np.ndarray]:
    """Continuous-time (A, B) for x = [e, dpsi, beta, omega], u = delta_f.

    e_dot    = v (dpsi + beta)
    dpsi_dot = omega
    beta_dot = -(cf+cr)/(m v) beta + ((cr lr - cf lf)/(m v^2) - 1) omega
               + cf/(m v) delta_f
    omega_dot = (cr lr - cf lf)/Iz beta - (cf lf^2 + cr lr^2)/(Iz v) omega
               + cf lf/Iz delta_f
    """
    m, iz, lf, lr, cf, cr, v = (p.mass, p.yaw_inertia, p.lf, p.lr, p.cf, p.cr, p.v)
    A = np.array([
        [0.0, v, v, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -(cf + cr) / (m * v), (cr * lr - cf * lf) / (m * v * v) - 1.0],
        [0.0, 0.0, (cr * lr - cf * lf) / iz, -(cf * lf * lf + cr * lr * lr) / (iz * v)],
    ])
    B = np.array([[0.0], [0.0], [cf / (m * v)], [cf * lf / iz]])
    return A, B


def discretize(A: np.ndarray, B: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact zero-order-hold discretization by truncated exponential series.

    Ad = sum A^i dt^i / i!,  Bd = (sum A^i dt^(i+1) / (i+1)!) B,
    summed until the increment norm drops below 1e-12.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    n = A.shape[0]
    Ad = np.eye(n)
    S = np.eye(n) * dt  # integral series for Bd
    term = np.eye(n)
    i = 1
    while True:
        term = term @ A * (dt / i)
        Ad = Ad + term
        S = S + term * (dt / (i + 1))
        if np.linalg.norm(term, ord=np.inf) < 1e-12:
            break
        i += 1
        if i > 200:
            raise RuntimeError("discretization series failed to converge")
    return Ad, S @ B


def step(Ad: np.ndarray, Bd: np.ndarray, x: LateralState, u: ControlInput) -> LateralState:
    """One discrete plant step x' = Ad x + Bd u."""
    nxt = Ad @ x.as_array() + Bd[:, 0] * u.delta_f
    return LateralState.from_array(nxt)
