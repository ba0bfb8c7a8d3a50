import numpy as np
import pytest

from occplan.vehicle import (
    ControlInput, LateralState, SingleTrackParams, continuous_matrices,
    discretize, step,
)

NOMINAL = SingleTrackParams(mass=1500, yaw_inertia=2500, lf=1.2, lr=1.5,
                            cf=80000, cr=80000, v=10.0)


def rk4_integrate(A, B, x0, u, t_end, dt=1e-4):
    """Fine-step RK4 oracle for the continuous dynamics with constant u."""
    def f(x):
        return A @ x + B[:, 0] * u
    x = x0.copy()
    steps = int(round(t_end / dt))
    for _ in range(steps):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


class TestContinuousMatrices:
    def test_equilibrium(self):
        A, B = continuous_matrices(NOMINAL)
        assert np.allclose(A @ np.zeros(4) + B[:, 0] * 0.0, 0.0)

    def test_lateral_rate_row(self):
        A, _ = continuous_matrices(NOMINAL)
        x = np.array([0.0, 0.1, 0.0, 0.0])
        assert (A @ x)[0] == pytest.approx(1.0, abs=1e-12)

    def test_slip_yaw_subsystem_stable(self):
        A, _ = continuous_matrices(NOMINAL)
        sub = A[2:, 2:]
        eigs = np.linalg.eigvals(sub)
        assert np.all(eigs.real < 0)
        # Independent check via characteristic polynomial sign conditions:
        # both roots have negative real part iff trace < 0 and det > 0.
        assert np.trace(sub) < 0
        assert np.linalg.det(sub) > 0

    def test_low_speed_rejected(self):
        with pytest.raises(ValueError):
            SingleTrackParams(v=0.3)

    def test_no_rear_steer_path(self):
        _, B = continuous_matrices(NOMINAL)
        assert B.shape == (4, 1)


class TestDiscretize:
    def test_nilpotent_exact(self):
        A = np.zeros((4, 4))
        B = np.array([[1.0], [0.0], [0.0], [0.0]])
        Ad, Bd = discretize(A, B, 0.1)
        assert np.allclose(Ad, np.eye(4))
        assert np.allclose(Bd, 0.1 * B)

    def test_zero_dt(self):
        A, B = continuous_matrices(NOMINAL)
        Ad, Bd = discretize(A, B, 0.0)
        assert np.allclose(Ad, np.eye(4))
        assert np.allclose(Bd, 0.0)

    def test_ten_steps_match_rk4(self):
        A, B = continuous_matrices(NOMINAL)
        Ad, Bd = discretize(A, B, 0.1)
        x = np.array([0.5, 0.02, 0.0, 0.0])
        u = 0.01
        for _ in range(10):
            x = Ad @ x + Bd[:, 0] * u
        x_ref = rk4_integrate(A, B, np.array([0.5, 0.02, 0.0, 0.0]), u, 1.0)
        assert np.max(np.abs(x - x_ref)) < 1e-3

    def test_first_order_consistency(self):
        # ||Ad - (I + A dt)|| must vanish at second order. The slip dynamics
        # are stiff at low speed, so the dt grid {0.1, 0.05, 0.025} only
        # reaches the asymptotic regime for the faster parameterization;
        # at v = 10 the same order shows up on a proportionally finer grid.
        for params, dts in ((SingleTrackParams(v=30.0), (0.1, 0.05, 0.025)),
                            (NOMINAL, (0.04, 0.02, 0.01))):
            A, _B = continuous_matrices(params)
            errs = []
            for dt in dts:
                Ad, _ = discretize(A, _B, dt)
                errs.append(np.linalg.norm(Ad - (np.eye(4) + A * dt)))
            order = np.log2(errs[1] / errs[2])
            assert order >= 1.9, (params.v, order)


class TestStep:
    def test_zero_fixed_point(self):
        A, B = continuous_matrices(NOMINAL)
        Ad, Bd = discretize(A, B, 0.1)
        out = step(Ad, Bd, LateralState(), ControlInput(0.0))
        assert out == LateralState()

    def test_superposition(self):
        A, B = continuous_matrices(NOMINAL)
        Ad, Bd = discretize(A, B, 0.1)
        x1 = LateralState(0.1, 0.02, -0.01, 0.3)
        x2 = LateralState(-0.4, 0.01, 0.02, -0.1)
        u1, u2 = ControlInput(0.02), ControlInput(-0.05)
        lhs = step(Ad, Bd, LateralState(*(np.add(x1.as_array(), x2.as_array()))),
                   ControlInput(u1.delta_f + u2.delta_f)).as_array()
        rhs = step(Ad, Bd, x1, u1).as_array() + step(Ad, Bd, x2, u2).as_array()
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_steer_sign_drives_deviation(self):
        A, B = continuous_matrices(NOMINAL)
        Ad, Bd = discretize(A, B, 0.1)
        x = LateralState()
        for _ in range(10):
            x = step(Ad, Bd, x, ControlInput(0.01))
        assert x.e > 0
        x_ref = rk4_integrate(A, B, np.zeros(4), 0.01, 1.0)
        assert x_ref[0] > 0

    def test_zoh_long_horizon_consistency(self):
        A, B = continuous_matrices(NOMINAL)
        for dt in (0.1, 0.05):
            Ad, Bd = discretize(A, B, dt)
            n = int(round(6.0 / dt))
            x = np.array([1.0, 0.0, 0.0, 0.0])
            for _ in range(n):
                x = Ad @ x + Bd[:, 0] * 0.05
            x_ref = rk4_integrate(A, B, np.array([1.0, 0.0, 0.0, 0.0]), 0.05, 6.0)
            assert np.max(np.abs(x - x_ref)) < 1e-3
