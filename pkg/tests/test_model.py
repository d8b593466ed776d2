import numpy as np
import pytest
import scipy.linalg

from collective_mode import (
    ModelValidationError,
    UnstableModelError,
    build_general_model,
    build_next_neighbor_model,
    full_potential_matrix,
    next_neighbor_frequencies,
    phonon_spectrum,
    potential_energy,
    standing_wave_basis,
    validate_model,
)


def test_next_neighbor_n2_matrices():
    model = build_next_neighbor_model(2, 1.0, 1.0, 1.0)
    # single bond between the two sites: (m w0^2/2)(x1 - x2)^2
    assert np.allclose(model.w_matrix, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)
    assert model.k_matrix[0, 0] == 0.5
    assert np.count_nonzero(model.k_matrix) == 1


def test_next_neighbor_scaling():
    model = build_next_neighbor_model(5, mass=2.0, omega0=3.0, alpha=0.7)
    c = 2.0 * 9.0 / 2.0
    assert model.w_matrix[1, 1] == pytest.approx(2 * c)
    assert model.w_matrix[0, 0] == pytest.approx(c)      # free end
    assert model.w_matrix[0, 1] == pytest.approx(-c)
    assert model.w_matrix[0, 4] == 0.0                   # no corner bond
    assert model.k_matrix[0, 0] == pytest.approx(0.35)


def test_zero_coupling_is_valid():
    model = build_next_neighbor_model(4, 1.0, 1.0, 0.0)
    violations = validate_model(model.w_matrix, model.k_matrix, model.mass)
    # the free-ended chain is flagged as non-circulant, nothing else
    assert {name for name, _ in violations} <= {"shift_invariance"}


def test_degenerate_inputs_rejected():
    with pytest.raises(ValueError):
        build_next_neighbor_model(1, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        build_next_neighbor_model(4, -1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        build_next_neighbor_model(4, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        build_next_neighbor_model(4, 1.0, 1.0, -0.5)


def test_general_model_constant_coupling_valid():
    w = build_next_neighbor_model(4, 1.0, 1.0, 0.0).w_matrix
    model = build_general_model(w, np.full((4, 4), 0.3), mass=1.0)
    assert model.n_particles == 4


def test_general_model_row_sum_violation():
    w = np.array([[1.0, -0.5], [-0.5, 1.0]])  # row sums 0.5, not 0
    with pytest.raises(ModelValidationError) as exc:
        build_general_model(w, np.zeros((2, 2)), mass=1.0)
    assert any(name == "row_sum" for name, _ in exc.value.violations)


def test_general_model_negative_coupling_violation():
    w = build_next_neighbor_model(3, 1.0, 1.0, 0.0).w_matrix
    k = np.zeros((3, 3))
    k[0, 1] = k[1, 0] = -0.1
    with pytest.raises(ModelValidationError) as exc:
        build_general_model(w, k, mass=1.0)
    assert any(name == "k_negative" for name, _ in exc.value.violations)


def test_general_model_asymmetry_violations():
    w = build_next_neighbor_model(3, 1.0, 1.0, 0.0).w_matrix.copy()
    w[0, 1] += 1e-9
    violations = validate_model(w, np.zeros((3, 3)), mass=1.0)
    assert any(name == "w_symmetry" for name, _ in violations)
    k = np.zeros((3, 3))
    k[0, 1] = 0.2
    violations = validate_model(
        build_next_neighbor_model(3, 1.0, 1.0, 0.0).w_matrix, k, mass=1.0)
    assert any(name == "k_symmetry" for name, _ in violations)


def test_phonon_frequencies_match_closed_form():
    # dense eigensolve must reproduce 2 w0 |sin(pi (k-1)/2N)| essentially exactly
    for n in (2, 3, 4, 8, 16, 33, 64):
        model = build_next_neighbor_model(n, 1.0, 1.3, 0.0)
        ph = phonon_spectrum(model)
        ref = next_neighbor_frequencies(n, 1.3)
        assert ph.frequencies[0] == 0.0
        assert np.allclose(ph.frequencies, ref, rtol=1e-12, atol=1e-13)


def test_phonon_n4_reference_values():
    ph = phonon_spectrum(build_next_neighbor_model(4, 1.0, 1.0, 0.0))
    assert np.allclose(
        ph.frequencies, [0.0, 0.76536686, 1.41421356, 1.84775907], atol=1e-8)


def test_phonon_basis_orthogonal_and_diagonalizing():
    for n in (2, 5, 16):
        model = build_next_neighbor_model(n, 1.5, 0.8, 0.0)
        ph = phonon_spectrum(model)
        assert np.abs(ph.basis @ ph.basis.T - np.eye(n)).max() < 1e-12
        target = (model.mass / 2.0) * np.diag(ph.frequencies**2)
        assert np.abs(ph.basis @ model.w_matrix @ ph.basis.T - target).max() < 1e-10


def test_phonon_basis_matches_standing_waves():
    # free chain modes are nondegenerate, so rows agree up to the fixed sign
    for n in (2, 4, 9):
        ph = phonon_spectrum(build_next_neighbor_model(n, 1.0, 1.0, 0.0))
        ref = standing_wave_basis(n)
        assert np.abs(np.abs(ph.basis) - np.abs(ref)).max() < 1e-10


def test_phonon_eigenvector_residuals():
    model = build_next_neighbor_model(12, 1.0, 1.0, 0.0)
    ph = phonon_spectrum(model)
    for k in range(12):
        resid = (2.0 / model.mass) * model.w_matrix @ ph.basis[k] \
            - ph.frequencies[k] ** 2 * ph.basis[k]
        assert np.linalg.norm(resid) < 1e-10 * ph.frequencies[-1] ** 2


def test_phonon_rejects_indefinite_chain():
    w = np.array([[-1.0, 1.0], [1.0, -1.0]])  # negative mode
    model_like = build_next_neighbor_model(2, 1.0, 1.0, 0.0)
    bad = type(model_like)(2, 1.0, w, np.zeros((2, 2)))
    with pytest.raises(UnstableModelError):
        phonon_spectrum(bad)


def test_full_potential_blocks():
    model = build_next_neighbor_model(4, 1.0, 1.0, 0.0)
    q = full_potential_matrix(model)
    assert np.allclose(q[:4, :4], model.w_matrix)
    assert np.allclose(q[4:, 4:], model.w_matrix)
    assert np.abs(q[:4, 4:]).max() == 0.0


def test_full_potential_matches_definition_and_hessian():
    rng = np.random.default_rng(42)
    model = build_next_neighbor_model(3, 1.3, 0.9, 0.8)
    q = full_potential_matrix(model)
    # quadratic form vs direct evaluation of the defining sum
    for _ in range(5):
        x = rng.normal(size=3)
        xbar = rng.normal(size=3)
        z = np.hstack([x, xbar])
        assert z @ q @ z == pytest.approx(potential_energy(model, x, xbar), rel=1e-12)
    # finite-difference Hessian of the scalar potential equals 2 Q
    # (the potential is exactly quadratic, so only round-off limits h)
    h = 1e-3
    hess = np.zeros((6, 6))
    z0 = rng.normal(size=6)
    def v(z):
        return potential_energy(model, z[:3], z[3:])
    for i in range(6):
        for j in range(6):
            zpp = z0.copy(); zpp[i] += h; zpp[j] += h
            zpm = z0.copy(); zpm[i] += h; zpm[j] -= h
            zmp = z0.copy(); zmp[i] -= h; zmp[j] += h
            zmm = z0.copy(); zmm[i] -= h; zmm[j] -= h
            hess[i, j] = (v(zpp) - v(zpm) - v(zmp) + v(zmm)) / (4 * h * h)
    assert np.abs(hess - 2 * q).max() < 1e-8


def test_full_potential_point_coupling_cross_entry():
    model = build_next_neighbor_model(2, 1.0, 1.0, 1.0)
    q = full_potential_matrix(model)
    # d^2 V / dx1 dxbar1 = -2 K_11 = -alpha; stored as Q entry -K_11
    assert q[0, 2] == pytest.approx(-0.5)


def test_full_potential_translation_invariance():
    model = build_next_neighbor_model(6, 1.0, 1.0, 2.0)
    q = full_potential_matrix(model)
    uniform = np.ones(12)
    assert np.abs(q @ uniform).max() < 1e-12


def test_full_potential_positive_semidefinite():
    for n, alpha in ((4, 0.0), (8, 1.0), (16, 10.0)):
        model = build_next_neighbor_model(n, 1.0, 1.0, alpha)
        eigs = scipy.linalg.eigvalsh(full_potential_matrix(model))
        assert eigs[0] >= -1e-10 * eigs[-1]


def test_model_arrays_read_only():
    model = build_next_neighbor_model(4, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        model.w_matrix[0, 0] = 99.0
