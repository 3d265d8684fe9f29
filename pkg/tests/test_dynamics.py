import io
import math

import numpy as np
import pytest
import scipy.linalg

from chain_lab.chain_model import ChainParams, PhaseState, build_drift, build_stiffness, energy, random_state
from chain_lab.dynamics import (
    TAU_DYN,
    ExactPropagator,
    Trajectory,
    exact_propagate,
    fit_decay,
    integrate,
    max_stable_dt,
    read_trajectory_csv,
    sample_exact,
    theoretical_decay_rate,
    verify_dissipation_identity,
    write_trajectory_csv,
)
from chain_lab.exceptions import DegenerateFitError, StepSizeError
from chain_lab.spectral import closed_form_spectrum, project, split_subspaces


def drift(p):
    return build_drift(p, build_stiffness(p))


class TestExactPropagate:
    def test_identity_at_zero(self, rng):
        p = ChainParams(6, n=2)
        psi = rng.standard_normal(12)
        assert np.array_equal(exact_propagate(drift(p), psi, 0.0).vector, psi)

    def test_unit_oscillator_rotation(self):
        p = ChainParams(1, alpha=0.0, allow_degenerate=True)
        out = exact_propagate(drift(p), PhaseState([1.0], [0.0]), math.pi / 2)
        np.testing.assert_allclose(out.vector, [0.0, -1.0], atol=1e-14)

    def test_conserved_mode(self):
        p = ChainParams(5, n=3)
        V = build_stiffness(p)
        spec = closed_form_spectrum(p)
        k = 3
        v, w = spec.eigenvectors[:, k], math.sqrt(spec.eigenvalues[k])
        prop = ExactPropagator(drift(p))
        for t in (0.3, 7.0, 55.5):
            out = prop(np.concatenate([v, 0 * v]), t)
            np.testing.assert_allclose(out.q, math.cos(w * t) * v, atol=1e-12)
            np.testing.assert_allclose(out.p, -w * math.sin(w * t) * v, atol=1e-12)
            assert energy(out, V) == pytest.approx(spec.eigenvalues[k] / 2, rel=1e-12)

    @pytest.mark.parametrize("N,n", [(3, 1), (6, 4), (11, 6)])
    def test_matches_scipy_expm(self, N, n, rng):
        A = drift(ChainParams(N, n, alpha=0.6))
        psi = rng.standard_normal(2 * N)
        for t in (0.5, 4.0, 25.0):
            expected = scipy.linalg.expm(t * A) @ psi
            np.testing.assert_allclose(exact_propagate(A, psi, t).vector, expected, atol=1e-10)

    def test_falls_back_to_expm_for_defective(self):
        # critically damped single oscillator: A = [[0,1],[-1,-2]] is a Jordan block
        A = np.array([[0.0, 1.0], [-1.0, -2.0]])
        prop = ExactPropagator(A)
        assert prop.method == "expm"
        np.testing.assert_allclose(prop([1.0, 0.0], 1.5).vector, scipy.linalg.expm(1.5 * A) @ [1.0, 0.0])

    def test_rejects_negative_time(self):
        with pytest.raises(ValueError):
            exact_propagate(np.eye(2), [1.0, 0.0], -1.0)


class TestIntegrate:
    def test_zero_state(self):
        tr = integrate(ChainParams(4, n=2), np.zeros(8), 5.0)
        assert np.all(tr.Q == 0) and np.all(tr.P == 0) and np.all(tr.energies == 0)

    def test_guard(self):
        p = ChainParams(4)
        dt_max = max_stable_dt(p)
        integrate(p, np.ones(8), 1.0, dt_max)
        with pytest.raises(StepSizeError) as err:
            integrate(p, np.ones(8), 1.0, dt_max * 1.01)
        assert err.value.dt_max == pytest.approx(dt_max)

    def test_lands_on_t_end(self):
        tr = integrate(ChainParams(3), np.ones(6), 2.0, 0.03)
        assert tr.times[-1] == 2.0
        assert np.all(np.diff(tr.times) <= 0.03 + 1e-15)

    @pytest.mark.parametrize("N,n,seed", [(5, 3, 1), (8, 1, 2), (13, 7, 3)])
    def test_energies_match_exact(self, N, n, seed):
        # global RK4 error grows ~2e-8 per step at the guard dt
        p = ChainParams(N, n)
        psi = random_state(N, seed)
        tr = integrate(p, psi, 1.5)
        ref = sample_exact(p, psi, tr.times)
        np.testing.assert_allclose(tr.energies, ref.energies, rtol=1e-6)

    @pytest.mark.parametrize("N,n,seed", [(5, 3, 1), (13, 7, 3)])
    def test_energy_error_fourth_order(self, N, n, seed):
        p = ChainParams(N, n)
        psi = random_state(N, seed)
        dt = max_stable_dt(p)
        errs = []
        for h in (dt, dt / 2):
            tr = integrate(p, psi, 30.0, h)
            ref = sample_exact(p, psi, tr.times)
            errs.append(np.abs(tr.energies / ref.energies - 1).max())
        assert errs[0] < 1e-5
        assert errs[0] / errs[1] >= 12.0

    def test_full_decay_power_of_two(self):
        p = ChainParams(8, n=3)
        c2 = theoretical_decay_rate(p)
        psi = random_state(8, 11)
        tr = integrate(p, psi, 50.0 / c2)
        assert tr.energies[-1] <= 1e-8 * tr.energies[0]

    def test_monotone(self):
        p = ChainParams(9, n=2, alpha=2.0)
        tr = integrate(p, random_state(9, 5), 60.0)
        assert np.all(np.diff(tr.energies) <= TAU_DYN * tr.energies[0])

    def test_order_four_against_exact(self):
        p = ChainParams(6, n=2)
        psi = random_state(6, 4)
        dt = max_stable_dt(p)
        errors = []
        for h in (dt, dt / 2, dt / 4):
            tr = integrate(p, psi, 20.0, h)
            ref = ExactPropagator(drift(p)).sample(psi, [20.0])[0]
            errors.append(np.abs(np.concatenate([tr.Q[-1], tr.P[-1]]) - ref).max())
        assert errors[0] / errors[1] >= 8.0
        assert errors[1] / errors[2] >= 8.0


class TestDissipationIdentity:
    def test_zero(self):
        p = ChainParams(3)
        assert verify_dissipation_identity(integrate(p, np.zeros(6), 1.0), p) == 0.0

    def test_conserved_state(self):
        p = ChainParams(5, n=3)
        s = split_subspaces(p)
        psi = s.conserved_matrix @ np.arange(1.0, 5.0)
        tr = sample_exact(p, psi, np.arange(0.0, 20.0, max_stable_dt(p)))
        assert np.abs(tr.powers).max() < 1e-25
        assert verify_dissipation_identity(tr, p) <= TAU_DYN
        # RK4's own energy drift on undamped modes floors the residual
        assert verify_dissipation_identity(integrate(p, psi, 20.0), p) <= 1e-5

    def test_random_and_order(self):
        p = ChainParams(5, n=3)
        psi = random_state(5, 3)
        dt = max_stable_dt(p)
        r1 = verify_dissipation_identity(integrate(p, psi, 20.0, dt), p)
        r2 = verify_dissipation_identity(integrate(p, psi, 20.0, dt / 2), p)
        assert 3.5 <= r1 / r2 <= 4.5
        # central-difference truncation: h^2 (2 sqrt(lambda_max))^2 / 6 relative
        lam_max = closed_form_spectrum(p).eigenvalues[-1]
        assert r1 <= 1.5 * dt**2 * 4 * lam_max / 6
        assert verify_dissipation_identity(integrate(p, psi, 20.0, dt / 10), p) <= 1e-4

    def test_needs_three_samples(self):
        p = ChainParams(1)
        tr = Trajectory(np.array([0.0, 1.0]), np.zeros((2, 1)), np.zeros((2, 1)), np.zeros(2), np.zeros(2))
        with pytest.raises(ValueError):
            verify_dissipation_identity(tr, p)


class TestDecayRate:
    def test_single_oscillator(self):
        # s^2 + s + 1: roots -1/2 +- i sqrt(3)/2
        assert theoretical_decay_rate(ChainParams(1)) == pytest.approx(1.0, rel=1e-12)

    def test_power_of_two_all_stable(self):
        for n in range(1, 9):
            p = ChainParams(8, n)
            assert np.linalg.eigvals(drift(p)).real.max() < 0
            assert theoretical_decay_rate(p) > 0

    def test_restricted_block_five_three(self):
        from chain_lab.dynamics import restricted_generator

        Ar = restricted_generator(ChainParams(5, n=3))
        assert Ar.shape == (6, 6)
        assert np.linalg.eigvals(Ar).real.max() < 0

    def test_full_spectrum_on_L0_is_imaginary(self):
        p = ChainParams(15, n=8)
        s = split_subspaces(p)
        B = s.conserved_matrix
        assert np.abs(np.linalg.eigvals(B.T @ drift(p) @ B).real).max() < 1e-12


def synthetic(times, H):
    z = np.zeros((times.size, 1))
    return Trajectory(times, z, z, H, np.zeros_like(H))


class TestFit:
    def test_exact_exponential(self):
        t = np.linspace(0, 10, 201)
        f = fit_decay(synthetic(t, 3 * np.exp(-2 * t)), 0.0)
        assert f.c2_hat == pytest.approx(2.0, rel=1e-12)
        assert f.c1_hat == pytest.approx(3.0, rel=1e-10)
        assert f.r_squared == pytest.approx(1.0)
        assert f.window == (0.0, 10.0)

    def test_window(self):
        t = np.linspace(0, 10, 201)
        f = fit_decay(synthetic(t, np.exp(-t)))
        assert f.window == (5.0, 10.0)

    def test_underflow_cut(self):
        t = np.linspace(0, 800, 801)
        f = fit_decay(synthetic(t, np.exp(-t)), 0.5)
        assert f.c2_hat == pytest.approx(1.0, rel=1e-10)
        assert f.window[1] < 800

    def test_too_few_samples(self):
        t = np.linspace(0, 1, 12)
        with pytest.raises(DegenerateFitError):
            fit_decay(synthetic(t, np.exp(-t)), 0.5)

    def test_bad_skip(self):
        with pytest.raises(ValueError):
            fit_decay(synthetic(np.arange(20.0), np.ones(20)), 1.0)

    def test_conserved_state_flat(self):
        p = ChainParams(5, n=3)
        s = split_subspaces(p)
        tr = sample_exact(p, s.conserved_matrix @ np.ones(4), np.linspace(0, 100, 1001))
        assert abs(fit_decay(tr).c2_hat) < 1e-10

    def test_decaying_matches_theory(self):
        p = ChainParams(8, n=1)
        c2 = theoretical_decay_rate(p)
        psi = random_state(8, 2)
        tr = sample_exact(p, psi, np.linspace(0, 30 / c2, 3001))
        assert fit_decay(tr).c2_hat == pytest.approx(c2, rel=0.2)


class TestInvariants:
    @pytest.mark.parametrize("N,n", [(5, 3), (15, 8), (9, 5)])
    def test_conservation_on_L0(self, N, n):
        p = ChainParams(N, n)
        V = build_stiffness(p)
        zero, _ = project(random_state(N, 0), split_subspaces(p), V)
        tr = sample_exact(p, zero, np.linspace(0, 100, 1001))
        assert np.abs(tr.energies - tr.energies[0]).max() <= 1e-8 * tr.energies[0]

    @pytest.mark.parametrize("N,n", [(4, 1), (9, 5), (12, 2)])
    def test_decay_on_L_minus(self, N, n):
        p = ChainParams(N, n)
        s = split_subspaces(p)
        _, minus = project(random_state(N, 1), s, build_stiffness(p))
        t_end = 40 / theoretical_decay_rate(p, s)
        tr = sample_exact(p, minus, [0.0, t_end])
        assert tr.energies[-1] <= 1e-6 * tr.energies[0]

    def test_splitting_persistence(self):
        p = ChainParams(9, n=5)
        V = build_stiffness(p)
        s = split_subspaces(p)
        prop = ExactPropagator(drift(p))
        psi = random_state(9, 3)
        zero0, _ = project(psi, s, V)
        for t in (1.0, 10.0, 80.0):
            zero_t, _ = project(prop(psi, t), s, V)
            np.testing.assert_allclose(zero_t.vector, prop(zero0, t).vector, atol=1e-10)
            assert abs(energy(zero_t, V) - energy(zero0, V)) <= TAU_DYN * energy(psi, V)

    def test_limit_energy(self):
        p = ChainParams(15, n=8)
        V = build_stiffness(p)
        s = split_subspaces(p)
        psi = random_state(15, 4)
        zero, _ = project(psi, s, V)
        tr = sample_exact(p, psi, [0.0, 40 / theoretical_decay_rate(p, s)])
        assert abs(tr.energies[-1] - energy(zero, V)) <= 1e-5 * tr.energies[0]


class TestCsv:
    def test_roundtrip(self):
        p = ChainParams(3, n=2)
        tr = integrate(p, random_state(3, 1), 0.5)
        buf = io.StringIO()
        write_trajectory_csv(tr, buf)
        text = buf.getvalue()
        assert text.splitlines()[0] == "t,H,power,q_1,q_2,q_3,p_1,p_2,p_3"
        back = read_trajectory_csv(io.StringIO(text))
        for name in ("times", "Q", "P", "energies", "powers"):
            assert np.array_equal(getattr(back, name), getattr(tr, name))

    def test_without_coords(self):
        tr = integrate(ChainParams(2), np.ones(4), 0.2)
        buf = io.StringIO()
        write_trajectory_csv(tr, buf, coords=False)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "t,H,power"
        assert len(lines) == len(tr) + 1
