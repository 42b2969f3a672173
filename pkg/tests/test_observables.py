import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cnlight.analytic_core import evolve_ground_analytic
from cnlight.dynamics import (
    CONSTANT_SCHEDULE,
    ground_product_state,
    integrate,
    make_superposition,
)
from cnlight.errors import ValidationError
from cnlight.hilbert import AtomicConfig, Kind
from cnlight.observables import (
    FieldDensityMatrix,
    HusimiGrid,
    SymmetryReport,
    detect_cyclic_symmetry,
    husimi,
    husimi_two_fock,
    husimi_values,
    linear_entropy,
    photon_probabilities,
    reduce_field,
)

REF = AtomicConfig(kind=Kind.XI, mu12=1.0, mu23=math.sqrt(2.0))


def fock_projector(nu, nu_max):
    rho = np.zeros((nu_max + 1, nu_max + 1), dtype=complex)
    rho[nu, nu] = 1.0
    return FieldDensityMatrix(rho=rho)


def pure_rho(vec):
    vec = np.asarray(vec, dtype=complex)
    vec = vec / np.linalg.norm(vec)
    return FieldDensityMatrix(rho=np.outer(vec, vec.conj()))


# ---------------------------------------------------------------------------
# density-matrix container


class TestFieldDensityMatrix:
    def test_rejects_non_square(self):
        with pytest.raises(ValidationError):
            FieldDensityMatrix(rho=np.zeros((2, 3)))

    def test_rejects_non_hermitian(self):
        bad = np.array([[0.5, 0.3], [0.1, 0.5]], dtype=complex)
        with pytest.raises(ValidationError):
            FieldDensityMatrix(rho=bad)

    def test_rejects_wrong_trace(self):
        with pytest.raises(ValidationError):
            FieldDensityMatrix(rho=0.7 * np.eye(2))

    def test_properties(self):
        rho = fock_projector(2, 4)
        assert rho.nu_max == 4
        assert rho.trace == pytest.approx(1.0)
        assert rho.min_eigenvalue() == pytest.approx(0.0, abs=1e-14)


# ---------------------------------------------------------------------------
# field reduction


class TestReduceField:
    def test_pure_fock(self):
        rho = reduce_field(ground_product_state(REF, 3))
        want = np.zeros((4, 4), dtype=complex)
        want[3, 3] = 1.0
        assert np.allclose(rho.rho, want, atol=1e-15)

    def test_evolved_ground_is_diagonal(self):
        # the three exit channels ride orthogonal atom levels, so every
        # field coherence dies in the trace
        tau = 1.3
        traj = integrate(
            ground_product_state(REF, 3), REF, CONSTANT_SCHEDULE, tau, n_snapshots=1
        )
        rho = reduce_field(traj.snapshots[-1])
        u13, u23, u33 = evolve_ground_analytic(REF, 3, tau)
        probs = photon_probabilities(rho)
        assert probs[1] == pytest.approx(abs(u13) ** 2, abs=1e-9)
        assert probs[2] == pytest.approx(abs(u23) ** 2, abs=1e-9)
        assert probs[3] == pytest.approx(abs(u33) ** 2, abs=1e-9)
        off = rho.rho - np.diag(np.diag(rho.rho))
        assert np.max(np.abs(off)) < 1e-12

    def test_two_sector_cat_keeps_one_stripe(self):
        theta, xi = 0.7, 0.4
        rho = reduce_field(make_superposition(1, 3, theta, xi, 1, REF))
        c = rho.rho[3, 1]
        assert abs(c) == pytest.approx(abs(math.cos(theta) * math.sin(theta)))
        # the only off-diagonal support is the (1, 3) pair
        mask = np.ones((4, 4), dtype=bool)
        for i, j in [(1, 1), (3, 3), (1, 3), (3, 1)]:
            mask[i, j] = False
        assert np.max(np.abs(rho.rho[mask])) == 0.0

    def test_reduction_is_positive(self):
        state = make_superposition(2, 7, 0.9, 1.8, 1, REF)
        traj = integrate(state, REF, CONSTANT_SCHEDULE, 2.0, n_snapshots=4)
        for snap in traj.snapshots:
            assert reduce_field(snap).min_eigenvalue() > -1e-12


class TestEntropy:
    def test_pure_state_has_zero_entropy(self):
        assert linear_entropy(fock_projector(0, 0)) == pytest.approx(0.0, abs=1e-15)
        assert linear_entropy(pure_rho([1.0, 0.0, 1.0])) == pytest.approx(
            0.0, abs=1e-14
        )

    def test_single_atom_bound(self):
        # rank <= 3 reduction: purity >= 1/3
        for tau in (0.5, 1.1, 2.9, 4.2):
            traj = integrate(
                ground_product_state(REF, 4), REF, CONSTANT_SCHEDULE, tau,
                n_snapshots=1,
            )
            s = linear_entropy(reduce_field(traj.snapshots[-1]))
            assert -1e-12 <= s <= 2.0 / 3.0 + 1e-12

    def test_matches_eigenvalue_form(self):
        traj = integrate(
            ground_product_state(REF, 5), REF, CONSTANT_SCHEDULE, 1.7, n_snapshots=1
        )
        rho = reduce_field(traj.snapshots[-1])
        lam = np.linalg.eigvalsh(rho.rho)
        assert linear_entropy(rho) == pytest.approx(1.0 - np.sum(lam**2), abs=1e-13)

    def test_probabilities_sum_to_trace(self):
        rho = reduce_field(make_superposition(0, 4, 0.3, 0.0, 1, REF))
        assert np.sum(photon_probabilities(rho)) == pytest.approx(1.0, abs=1e-13)


# ---------------------------------------------------------------------------
# Husimi function


class TestHusimi:
    def test_vacuum_gaussian(self):
        grid = husimi(fock_projector(0, 0), grid=((-4, 4, 81), (-4, 4, 81)))
        qm, pm = np.meshgrid(grid.q_values, grid.p_values)
        want = np.exp(-(qm**2 + pm**2) / 2.0) / math.pi
        assert np.max(np.abs(grid.values - want)) < 1e-14
        assert np.max(grid.values) == pytest.approx(1.0 / math.pi)

    def test_default_grid_normalization(self):
        for state in (
            make_superposition(2, 7, math.pi / 4, 0.0, 1, REF),
            make_superposition(1, 3, 0.9, 2.1, 1, REF),
        ):
            grid = husimi(reduce_field(state))
            assert grid.normalization() == pytest.approx(1.0, abs=1e-3)

    def test_fock_ring_radius(self):
        # Q of |nu> peaks on the circle |alpha|^2 = nu
        rho = fock_projector(3, 3)
        rad = np.linspace(0.01, 5.0, 500)
        q = husimi_values(rho, rad, np.zeros_like(rad))
        assert rad[np.argmax(q)] ** 2 == pytest.approx(3.0, abs=0.05)

    def test_polar_values_match_grid(self):
        rho = reduce_field(make_superposition(1, 4, 0.6, 0.5, 1, REF))
        grid = husimi(rho, grid=((-3, 3, 61), (-3, 3, 61)))
        alpha = (grid.q_values[45] + 1j * grid.p_values[10]) / math.sqrt(2.0)
        val = husimi_values(rho, np.abs(alpha), np.angle(alpha))
        assert val[0] == pytest.approx(grid.values[10, 45], abs=1e-14)

    def test_validation(self):
        rho = fock_projector(0, 1)
        with pytest.raises(ValidationError):
            husimi(rho, grid=((-1, 1, 1), (-1, 1, 5)))
        with pytest.raises(ValidationError):
            husimi_values(rho, [1.0, 2.0], [0.0])
        with pytest.raises(ValidationError):
            husimi_values(rho, -0.5, 0.0)


class TestHusimiTwoFock:
    def test_origin_value(self):
        # only the nu = 0 component survives at the origin
        got = husimi_two_fock(0, 1, math.pi / 4, 0.0, 0.0, 0.0)
        assert got == pytest.approx(0.5 / math.pi, abs=1e-15)
        assert isinstance(got, float)

    def test_single_component_is_angle_independent(self):
        phis = np.linspace(0.0, 2.0 * math.pi, 50)
        vals = husimi_two_fock(2, 7, 0.0, 0.0, np.full_like(phis, 1.4), phis)
        assert np.ptp(vals) < 1e-16

    def test_matches_generic_husimi(self):
        nu1, nu2, theta, xi = 2, 7, math.pi / 3, 0.9
        rho = reduce_field(make_superposition(nu1, nu2, theta, xi, 1, REF))
        rng = np.random.default_rng(5)
        rad = rng.uniform(0.0, 6.0, 2000)
        ang = rng.uniform(0.0, 2.0 * math.pi, 2000)
        generic = husimi_values(rho, rad, ang)
        closed = husimi_two_fock(nu1, nu2, theta, xi, rad, ang)
        assert np.max(np.abs(generic - closed)) < 1e-12

    def test_invariant_under_cyclic_rotation(self):
        rad = np.full(100, 2.0)
        ang = np.linspace(0.0, 2.0 * math.pi, 100)
        q1 = husimi_two_fock(2, 7, 0.8, 0.3, rad, ang)
        q2 = husimi_two_fock(2, 7, 0.8, 0.3, rad, ang + 2.0 * math.pi / 5.0)
        assert np.max(np.abs(q1 - q2)) < 1e-14

    def test_phase_acts_as_rigid_rotation(self):
        nu1, nu2, xi = 1, 4, 1.3
        rad = np.full(64, 1.7)
        ang = np.linspace(0.0, 2.0 * math.pi, 64, endpoint=False)
        with_phase = husimi_two_fock(nu1, nu2, 0.7, xi, rad, ang)
        rotated = husimi_two_fock(nu1, nu2, 0.7, 0.0, rad, ang - xi / (nu2 - nu1))
        assert np.max(np.abs(with_phase - rotated)) < 1e-12

    def test_validation(self):
        with pytest.raises(ValidationError):
            husimi_two_fock(3, 3, 0.5, 0.0, 1.0, 0.0)
        with pytest.raises(ValidationError):
            husimi_two_fock(-1, 2, 0.5, 0.0, 1.0, 0.0)
        with pytest.raises(ValidationError):
            husimi_two_fock(0, 2, 0.5, 0.0, -1.0, 0.0)

    @settings(max_examples=30, deadline=None)
    @given(
        rad=st.floats(0.0, 6.0, allow_nan=False),
        ang=st.floats(0.0, 2.0 * math.pi, allow_nan=False),
    )
    def test_never_negative(self, rad, ang):
        assert husimi_two_fock(1, 5, 0.6, 2.0, rad, ang) >= -1e-16


# ---------------------------------------------------------------------------
# symmetry certification


class TestDetectCyclicSymmetry:
    def test_diagonal_state_is_continuous(self):
        rho = FieldDensityMatrix(rho=np.diag([0.25, 0.25, 0.5]).astype(complex))
        report = detect_cyclic_symmetry(rho)
        assert report.order == 0
        assert report.support_differences == ()
        assert report.max_residual < 1e-10

    def test_two_fock_cat(self):
        rho = reduce_field(make_superposition(2, 7, math.pi / 4, 0.6, 1, REF))
        report = detect_cyclic_symmetry(rho)
        assert report.order == 5
        assert report.support_differences == (5,)
        assert report.max_residual < 1e-10

    def test_gcd_of_mixed_support(self):
        rho = pure_rho([1.0] + [0.0] * 3 + [1.0] + [0.0] * 5 + [1.0])
        report = detect_cyclic_symmetry(rho)
        assert report.support_differences == (4, 6, 10)
        assert report.order == 2
        assert report.max_residual < 1e-10

    def test_deterministic(self):
        rho = reduce_field(make_superposition(1, 4, 0.5, 0.2, 1, REF))
        r1 = detect_cyclic_symmetry(rho)
        r2 = detect_cyclic_symmetry(rho)
        assert r1 == r2

    def test_tolerance_gates_support(self):
        rho_mat = np.diag([0.5, 0.0, 0.5]).astype(complex)
        rho_mat[0, 2] = rho_mat[2, 0] = 1e-12
        report = detect_cyclic_symmetry(FieldDensityMatrix(rho=rho_mat))
        assert report.order == 0  # below the coherence tolerance
        loose = detect_cyclic_symmetry(FieldDensityMatrix(rho=rho_mat), tol=1e-14)
        assert loose.order == 2
