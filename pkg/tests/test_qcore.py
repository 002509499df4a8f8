"""Linear-algebra layer: operator contracts, spectral checks, and the
all-principal-minors positivity oracle."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pitomo.qcore import (ComplexMatrix, DensityMatrix, eigenvalues_hermitian,
                          eigh_hermitian, fidelity_mixed, fidelity_pure,
                          is_positive_semidefinite, kron, partial_trace,
                          qubit_state_fidelity)
from pitomo.states import IdlerStateParams
from pitomo.interferometer import (InterferometerConfig,
                                   coherence_stressed_state, total_state)
from pitomo._kernels import Rng
from conftest import random_hermitian

SQRT1_2 = 1.0 / math.sqrt(2.0)


def cm(rows):
    return ComplexMatrix.from_rows(rows)


def dm(rows, labels=()):
    m = cm(rows)
    return DensityMatrix(m.rows, m, tuple(labels))


# ---------------------------------------------------------------------------
# carriers


def test_complex_matrix_validation():
    with pytest.raises(ValueError):
        ComplexMatrix(2, 2, (1j, 2j, 3j))
    with pytest.raises(ValueError):
        ComplexMatrix(1, 1, (complex("nan"),))
    with pytest.raises(ValueError):
        ComplexMatrix(0, 2, ())


def test_density_matrix_validation():
    with pytest.raises(ValueError):  # not Hermitian
        dm([[0.5, 0.5], [0.2, 0.5]])
    with pytest.raises(ValueError):  # trace 2
        dm([[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ValueError):  # label count
        dm([[1.0, 0.0], [0.0, 0.0]], labels=("a",))
    state = dm([[0.5, 0.5], [0.5, 0.5]])
    assert state.basis_labels == ("m0", "m1")


def test_matrix_json_round_trip():
    m = cm([[1 + 2j, 0.5], [-1j, 0.25]])
    assert ComplexMatrix.from_json_dict(m.to_json_dict()) == m
    state = dm([[0.75, 0.1j], [-0.1j, 0.25]], labels=("H", "V"))
    back = DensityMatrix.from_json_dict(state.to_json_dict())
    assert back == state


# ---------------------------------------------------------------------------
# kron


def test_kron_identity():
    i2 = ComplexMatrix.identity(2)
    assert kron(i2, i2) == ComplexMatrix.identity(4)


def test_kron_projectors():
    p = cm([[1, 0], [0, 0]])
    k = kron(p, p)
    assert k == cm([[1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]])


def test_kron_builds_recombiner():
    had = cm([[SQRT1_2, SQRT1_2], [SQRT1_2, -SQRT1_2]])
    bs = kron(had, ComplexMatrix.identity(2))
    expected = cm([
        [SQRT1_2, 0, SQRT1_2, 0],
        [0, SQRT1_2, 0, SQRT1_2],
        [SQRT1_2, 0, -SQRT1_2, 0],
        [0, SQRT1_2, 0, -SQRT1_2],
    ])
    assert all(abs(a - b) < 1e-15 for a, b in zip(bs.entries, expected.entries))


# ---------------------------------------------------------------------------
# partial trace


def test_partial_trace_product_state():
    idler = IdlerStateParams(0.3, 1.2, 0.9).to_density_matrix()
    signal = dm([[1.0, 0.0], [0.0, 0.0]])
    joint = DensityMatrix(4, kron(signal.matrix, idler.matrix))
    reduced = partial_trace(joint, (2, 2), keep=(0,))
    assert all(abs(a - b) < 1e-15
               for a, b in zip(reduced.matrix.entries, signal.matrix.entries))
    # tracing out the signal instead returns the idler state exactly
    reduced_i = partial_trace(joint, (2, 2), keep=(1,))
    assert all(abs(a - b) < 1e-15
               for a, b in zip(reduced_i.matrix.entries, idler.matrix.entries))


def test_partial_trace_bell_marginal():
    bell = [SQRT1_2, 0, 0, SQRT1_2]
    rho = dm([[bell[i] * bell[j] for j in range(4)] for i in range(4)])
    for keep in ((0,), (1,)):
        red = partial_trace(rho, (2, 2), keep=keep)
        assert abs(red.at(0, 0) - 0.5) < 1e-15
        assert abs(red.at(1, 1) - 0.5) < 1e-15
        assert abs(red.at(0, 1)) < 1e-15


def test_partial_trace_preserves_trace_and_commutes(rng):
    h = random_hermitian(rng, 8, scale=0.5)
    arr = np.array(h, dtype=complex).reshape(8, 8)
    arr = arr @ arr.conj().T
    arr /= np.trace(arr).real
    rho = DensityMatrix(8, ComplexMatrix(8, 8, tuple(arr.flatten().tolist())))
    a_then_b = partial_trace(partial_trace(rho, (2, 2, 2), (1, 2)), (2, 2), (1,))
    b_then_a = partial_trace(partial_trace(rho, (2, 2, 2), (0, 2)), (2, 2), (1,))
    assert all(abs(x - y) < 1e-12
               for x, y in zip(a_then_b.matrix.entries, b_then_a.matrix.entries))
    assert abs(a_then_b.matrix.trace() - 1.0) < 1e-12


def test_partial_trace_dimension_mismatch():
    rho = dm([[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        partial_trace(rho, (2, 2), keep=(0,))
    with pytest.raises(ValueError):
        partial_trace(rho, (2,), keep=(3,))


# ---------------------------------------------------------------------------
# eigensolver


def test_eigenvalues_diagonal():
    assert eigenvalues_hermitian(cm([[0.3, 0], [0, 0.7]])) == pytest.approx([0.3, 0.7])
    assert eigenvalues_hermitian(cm([[0.5, 0], [0, 0.5]])) == pytest.approx([0.5, 0.5])


def test_eigenvalues_post_interaction_spectrum():
    # half a pure projector plus a quarter of the identity
    psi = (SQRT1_2, SQRT1_2 * 1j)
    m = cm([[0.5 * psi[i] * psi[j].conjugate() + (0.25 if i == j else 0.0)
             for j in range(2)] for i in range(2)])
    vals = eigenvalues_hermitian(m)
    assert vals == pytest.approx([0.25, 0.75], abs=1e-12)


def test_eigen_sum_equals_trace(rng):
    for trial in range(40):
        n = 2 + trial % 7
        h = random_hermitian(rng, n)
        m = ComplexMatrix(n, n, tuple(h))
        vals = eigenvalues_hermitian(m)
        assert vals == sorted(vals)
        assert abs(sum(vals) - m.trace().real) < 1e-10


def test_eigen_rejects_non_hermitian():
    with pytest.raises(ValueError):
        eigenvalues_hermitian(cm([[0, 1], [0, 0]]))


def test_eigh_reconstruction_residual(rng):
    h = random_hermitian(rng, 8)
    m = ComplexMatrix(8, 8, tuple(h))
    vals, vecs = eigh_hermitian(m)
    v = np.array(vecs.entries).reshape(8, 8)
    recon = v @ np.diag(vals) @ v.conj().T
    assert np.max(np.abs(recon - np.array(h).reshape(8, 8))) < 1e-10


# ---------------------------------------------------------------------------
# positivity


def _principal_minors_psd(flat, n, tol=1e-10):
    """Generalized Sylvester oracle: every principal minor >= -tol."""
    arr = np.array(flat, dtype=complex).reshape(n, n)

    def det(sub):
        m = sub.shape[0]
        if m == 1:
            return sub[0, 0]
        acc = 0j
        for j in range(m):
            minor = np.delete(np.delete(sub, 0, axis=0), j, axis=1)
            acc += (-1) ** j * sub[0, j] * det(minor)
        return acc

    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            sub = arr[np.ix_(subset, subset)]
            if det(sub).real < -tol:
                return False
    return True


def test_psd_boundary_case():
    assert is_positive_semidefinite(cm([[1, 0], [0, 0]]), tol=1e-10)


def test_psd_full_coherence_total_state():
    idler = IdlerStateParams(0.5, 0.9, 1.0)
    cfg = InterferometerConfig(b1=0.6, b2_mag=0.8, phi=0.7, idler=idler)
    rho = total_state(cfg)
    assert is_positive_semidefinite(rho.matrix, tol=1e-10)


def test_psd_detects_overcoherent_state():
    idler = IdlerStateParams(0.5, 1.2, 1.0)
    cfg = InterferometerConfig(b1=1 / math.sqrt(3), b2_mag=math.sqrt(2 / 3),
                               phi=0.7, idler=idler)
    rho = coherence_stressed_state(cfg, 1.5)
    assert not is_positive_semidefinite(rho.matrix, tol=1e-10)
    # numpy agrees the spectrum is genuinely negative
    ref = np.linalg.eigvalsh(
        np.array(rho.matrix.entries).reshape(8, 8))
    assert ref[0] < -1e-4


def test_psd_agrees_with_principal_minors_oracle():
    rng = Rng(314159, 0)
    checked = 0
    for trial in range(1000):
        n = 3 if trial % 2 == 0 else 4
        h = random_hermitian(rng, n)
        if trial % 2 == 1:
            # make roughly half the cases PSD by squaring
            arr = np.array(h, dtype=complex).reshape(n, n)
            arr = arr @ arr.conj().T
            h = list(arr.flatten())
        m = ComplexMatrix(n, n, tuple(h))
        assert (is_positive_semidefinite(m, tol=1e-10)
                == _principal_minors_psd(h, n, tol=1e-10))
        checked += 1
    assert checked == 1000


# ---------------------------------------------------------------------------
# fidelities


def test_fidelity_pure_basics():
    h = (1.0, 0.0)
    v = (0.0, 1.0)
    d = (SQRT1_2, SQRT1_2)
    assert fidelity_pure(h, h) == pytest.approx(1.0)
    assert fidelity_pure(h, v) == pytest.approx(0.0)
    assert fidelity_pure(h, d) == pytest.approx(0.5)
    assert fidelity_pure(d, h) == pytest.approx(0.5)


def test_fidelity_pure_rejects_unnormalized():
    with pytest.raises(ValueError):
        fidelity_pure((1.0, 1.0), (1.0, 0.0))
    with pytest.raises(ValueError):
        fidelity_pure((1.0, 0.0), (0.5, 0.0))


@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_fidelity_pure_global_phase_invariance(a, b):
    import cmath
    psi = (SQRT1_2, SQRT1_2 * 1j)
    phi = (0.6, math.sqrt(1 - 0.36) + 0j)
    base = fidelity_pure(psi, phi)
    rotated = fidelity_pure(tuple(cmath.exp(1j * a) * x for x in psi),
                            tuple(cmath.exp(1j * b) * x for x in phi))
    assert abs(base - rotated) < 1e-12


def test_fidelity_mixed():
    half = dm([[0.5, 0], [0, 0.5]])
    any_state = (0.8, 0.6j)
    assert fidelity_mixed(half, any_state) == pytest.approx(0.5)
    proj = dm([[1.0, 0], [0, 0.0]])
    assert fidelity_mixed(proj, (1.0, 0.0)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fidelity_mixed(half, (1.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        fidelity_mixed(half, (1.0, 1.0))


def test_fidelity_mixed_post_interaction_value():
    psi = (0.6, 0.8j)
    m = cm([[0.5 * psi[i] * psi[j].conjugate() + (0.25 if i == j else 0)
             for j in range(2)] for i in range(2)])
    rho = DensityMatrix(2, m)
    assert fidelity_mixed(rho, psi) == pytest.approx(0.75, abs=1e-12)


def test_qubit_state_fidelity_matches_pure_overlap():
    a = IdlerStateParams(0.3, 0.7, 1.0)
    b = IdlerStateParams(0.6, 2.0, 1.0)
    f_closed = qubit_state_fidelity(a.to_density_matrix(), b.to_density_matrix())
    f_pure = fidelity_pure(a.state_vector(), b.state_vector())
    assert f_closed == pytest.approx(f_pure, abs=1e-12)
