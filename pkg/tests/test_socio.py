import numpy as np
import pytest
from hypothesis import given, strategies as st

from sustain_models.errors import CFLViolationError, DegenerateModelError
from sustain_models.numerics import SpatialGrid1D, TimeGrid
from sustain_models.socio import (
    ControlField, ControlProblem, CrimeInputs, CrimeOdeParams, LogisticGrowth, adjoint_gradient,
    control_objective, crime_equilibrium, crime_family, crime_ode_rhs, forward_crime_pde,
    optimize_police, project_budget, simulate_crime_ode,
)


def toy_problem(cells=16, steps=32, D=0.05):
    grid = SpatialGrid1D(0, 1, cells)
    c0 = 1.0 + 0.5 * np.sin(np.pi * grid.centers)
    return ControlProblem(grid, TimeGrid(0, steps * 0.01, 0.01), c0, alpha=0.5, diffusivity=D,
                          growth=LogisticGrowth(1.0, 2.0))


class TestCrimeOde:
    P = CrimeOdeParams(-0.5, 0.2, 0.1, 0.3)
    U = CrimeInputs.constant(2, 0.5, 0.5)

    def test_rhs(self):
        assert crime_ode_rhs(1.0, 0.0, self.P, self.U) == pytest.approx(-0.5 - 0.1 - 0.05 + 0.6)

    def test_equilibrium_and_stability(self):
        eq = crime_equilibrium(self.P, self.U)
        assert eq.x_star == pytest.approx(0.9) and eq.stable
        assert not crime_equilibrium(CrimeOdeParams(0.5, 0.2), self.U).stable

    def test_zero_growth_degenerate(self):
        with pytest.raises(DegenerateModelError):
            crime_equilibrium(CrimeOdeParams(0.0, 1.0), self.U)

    def test_relaxes_to_equilibrium_frozen(self):
        tr = simulate_crime_ode(self.P, self.U, 2.0, TimeGrid(0, 20, 0.01))
        assert tr.final.tolist() == [0.900049939922741]
        exact = 0.9 + 1.1 * np.exp(-0.5 * 20)
        assert tr.final[0] == pytest.approx(exact, rel=1e-10)

    def test_time_varying_inputs(self):
        u = CrimeInputs(lambda t: t, lambda t: 0.0, lambda t: 0.0)
        tr = simulate_crime_ode(CrimeOdeParams(0.0, d=1.0), u, 0.0, TimeGrid(0, 2, 0.1))
        assert tr.final[0] == pytest.approx(2.0)  # integral of t
        with pytest.raises(ValueError):
            crime_equilibrium(CrimeOdeParams(1.0), u)

    def test_clamped_at_zero(self):
        tr = simulate_crime_ode(CrimeOdeParams(-1, c=1), CrimeInputs.constant(0, 5, 0), 1.0,
                                TimeGrid(0, 2, 0.01))
        assert tr.states.min() == 0.0 and tr.clamp_events > 0

    def test_family(self):
        f = crime_family(self.P, self.U, "a")(1.0)
        assert f(np.array([0.0]))[0] == pytest.approx(crime_ode_rhs(0.0, 0, self.P, self.U))
        with pytest.raises(ValueError):
            crime_family(self.P, self.U, "z")

    def test_validation(self):
        with pytest.raises(ValueError):
            CrimeOdeParams(1.0, b=-1)
        with pytest.raises(ValueError):
            CrimeInputs.constant(-1)


class TestProjection:
    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=12), st.floats(0.01, 3),
           st.floats(0.05, 1))
    def test_feasible_and_idempotent(self, row, budget, dx):
        p = project_budget(np.array([row]), budget, dx)
        assert p.min() >= 0
        assert p.sum() * dx <= budget * (1 + 1e-12) + 1e-12
        np.testing.assert_allclose(project_budget(p, budget, dx), p, atol=1e-12)

    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=8), st.floats(0.01, 3),
           st.integers(0, 2**32 - 1))
    def test_is_nearest_point(self, row, budget, seed):
        v = np.array([row])
        p = project_budget(v, budget, 1.0)
        rng = np.random.default_rng(seed)
        for _ in range(20):
            q = project_budget(rng.uniform(-1, 5, v.shape), budget, 1.0)
            assert np.sum((v - p) ** 2) <= np.sum((v - q) ** 2) + 1e-9

    def test_inside_unchanged(self):
        v = np.array([[0.1, 0.2, 0.0]])
        np.testing.assert_array_equal(project_budget(v, 1.0, 1.0), v)


class TestControl:
    def test_uncontrolled_logistic_limit(self):
        grid = SpatialGrid1D(0, 1, 4)
        prob = ControlProblem(grid, TimeGrid(0, 10, 0.01), np.full(4, 0.5), 1.0,
                              growth=LogisticGrowth(1.0, 2.0))
        sol = forward_crime_pde(prob, np.zeros(prob.shape))
        np.testing.assert_allclose(sol.values[-1], 2.0 / (1 + 3 * np.exp(-10)), rtol=1e-3)

    def test_weights_integrate_constant(self):
        prob = toy_problem()
        w = prob.quadrature_weights() * np.ones(prob.shape)
        assert w.sum() == pytest.approx(0.32 * 1.0)

    def test_objective_zero_control(self):
        prob = toy_problem()
        sol = forward_crime_pde(prob, np.zeros(prob.shape))
        w = prob.quadrature_weights()
        assert control_objective(prob, np.zeros(prob.shape)) == pytest.approx(
            float(np.sum(w * sol.values**2)))

    def test_cfl_guard(self):
        grid = SpatialGrid1D(0, 1, 100)
        prob = ControlProblem(grid, TimeGrid(0, 1, 0.1), np.ones(100), 1.0, diffusivity=1.0)
        with pytest.raises(CFLViolationError):
            forward_crime_pde(prob, np.zeros(prob.shape))

    @pytest.mark.parametrize("boundary", ["zero-flux", "periodic", "absorbing"])
    def test_adjoint_matches_finite_differences(self, boundary, rng):
        grid = SpatialGrid1D(0, 1, 16, boundary)
        base = toy_problem()
        prob = ControlProblem(grid, base.horizon, base.initial, base.alpha, base.diffusivity,
                              base.growth)
        P = rng.uniform(0, 0.3, prob.shape)
        g = adjoint_gradient(prob, P, representation="euclidean")
        idx = [tuple(rng.integers(0, n) for n in prob.shape) for _ in range(20)]
        fd = []
        for i in idx:
            e = 1e-6
            Pp, Pm = P.copy(), P.copy()
            Pp[i] += e
            Pm[i] -= e
            fd.append((control_objective(prob, Pp) - control_objective(prob, Pm)) / (2 * e))
        ad = np.array([g[i] for i in idx])
        fd = np.array(fd)
        assert np.linalg.norm(ad - fd) / np.linalg.norm(fd) < 1e-4

    def test_l2_representation(self):
        prob = toy_problem()
        P = np.full(prob.shape, 0.1)
        e = adjoint_gradient(prob, P, representation="euclidean")
        l2 = adjoint_gradient(prob, P)
        np.testing.assert_allclose(l2 * prob.quadrature_weights(), e, rtol=1e-12)
        with pytest.raises(ValueError):
            adjoint_gradient(prob, P, representation="sobolev")

    def test_optimizer_monotone_and_feasible(self):
        prob = toy_problem()
        start = ControlField.zeros(prob, 0.1)
        res = optimize_police(prob, start, iterations=30)
        h = np.array(res.history)
        assert np.all(np.diff(h) <= 0)
        assert h[-1] < h[0]
        assert res.control.is_feasible()
        assert res.status in ("converged", "max-iterations")

    def test_optimizer_callback_sees_every_accepted_iterate(self):
        prob = toy_problem()
        seen = []

        def record(it, P, J):
            seen.append((it, J, ControlField(P, 0.1, prob.domain.dx).is_feasible(1e-8)))

        res = optimize_police(prob, ControlField.zeros(prob, 0.1), iterations=30, callback=record)
        assert [s[0] for s in seen] == list(range(len(res.history)))
        assert [s[1] for s in seen] == list(res.history)
        assert all(s[2] for s in seen)

    def test_optimizer_rejects_infeasible_start(self):
        prob = toy_problem()
        with pytest.raises(ValueError):
            optimize_police(prob, ControlField(np.ones(prob.shape), 0.1, prob.domain.dx))

    def test_control_field_usage(self):
        prob = toy_problem()
        f = ControlField(np.full(prob.shape, 0.05), 0.1, prob.domain.dx)
        np.testing.assert_allclose(f.usage(), 0.05)
        assert f.is_feasible()
        with pytest.raises(ValueError):
            ControlField(np.zeros(3), 0.1, 0.1)
        with pytest.raises(ValueError):
            ControlField(np.zeros((2, 2)), 0.0, 0.1)

    def test_shape_mismatch(self):
        prob = toy_problem()
        with pytest.raises(ValueError):
            forward_crime_pde(prob, np.zeros((3, 3)))
