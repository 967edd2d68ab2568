#!/usr/bin/env python3
"""
Test the dense linear algebra kernels
"""

import numpy as np

from state_discrimination.exceptions import DimensionCapError, NumericsError
from state_discrimination.numerics import (
    complete_onb,
    contraction_eigen,
    contraction_sqrt,
    haar_unitary,
    herm_eigen,
    kron,
    kron_all,
    normalize_phase,
    partial_trace,
    partial_transpose,
    pinv,
    psd_inverse_sqrt,
    psd_sqrt,
    schmidt_coefficients,
    snap_unit_interval,
    unitarity_violation,
)


def rng(seed=7):
    return np.random.Generator(np.random.Philox(seed))


def random_density(dim, generator):
    a = generator.standard_normal((dim, dim)) + 1j * generator.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def test_partial_trace_of_product():
    g = rng()
    a = random_density(2, g)
    b = random_density(3, g)
    rho = np.kron(a, b)
    assert np.allclose(partial_trace(rho, [2, 3], [0]), a, atol=1e-12)
    assert np.allclose(partial_trace(rho, [2, 3], [1]), b, atol=1e-12)


def test_partial_trace_three_parties_keeps_order():
    g = rng(1)
    a, b, c = random_density(2, g), random_density(3, g), random_density(2, g)
    rho = kron_all([a, b, c])
    assert np.allclose(partial_trace(rho, [2, 3, 2], [0, 2]), np.kron(a, c), atol=1e-12)
    assert np.allclose(partial_trace(rho, [2, 3, 2], [2, 0]), np.kron(a, c), atol=1e-12)
    assert np.allclose(partial_trace(rho, [2, 3, 2], [0, 1, 2]), rho)


def test_partial_trace_rejects_bad_dims():
    try:
        partial_trace(np.eye(6), [2, 2], [0])
    except NumericsError:
        return
    raise AssertionError("Expected NumericsError")


def test_partial_transpose_of_product():
    g = rng(2)
    a = random_density(2, g)
    b = random_density(3, g)
    pt = partial_transpose(np.kron(a, b), [2, 3], [1])
    assert np.allclose(pt, np.kron(a, b.T), atol=1e-12)


def test_partial_transpose_detects_entanglement():
    bell = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    rho = np.outer(bell, bell.conj())
    smallest = np.linalg.eigvalsh(partial_transpose(rho, [2, 2], [1])).min()
    assert abs(smallest + 0.5) < 1e-12


def test_schmidt_coefficients():
    bell = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    assert np.allclose(schmidt_coefficients(bell, [2, 2]), [1 / np.sqrt(2)] * 2)
    product = np.kron([1, 0], [0.6, 0.8])
    assert np.allclose(schmidt_coefficients(product, [2, 2]), [1, 0], atol=1e-12)


def test_kron_cap():
    assert kron(np.eye(2), np.eye(3)).shape == (6, 6)
    try:
        kron(np.eye(64), np.eye(65), max_dim=4096)
    except DimensionCapError:
        return
    raise AssertionError("Expected DimensionCapError")


def test_herm_eigen_descending_and_reconstructs():
    g = rng(3)
    h = random_density(4, g)
    eig = herm_eigen(h)
    assert np.all(np.diff(eig.values) <= 1e-12)
    assert np.allclose(eig.reconstruct(), h, atol=1e-12)
    assert unitarity_violation(eig.vectors) < 1e-12


def test_herm_eigen_deterministic_on_degenerate_spectrum():
    eig = herm_eigen(np.diag([1.0, 1.0, 0.0]))
    assert np.allclose(eig.values, [1, 1, 0])
    assert np.allclose(eig.vectors[:, 0], [1, 0, 0])
    assert np.allclose(eig.vectors[:, 1], [0, 1, 0])


def test_herm_eigen_rejects_non_hermitian():
    try:
        herm_eigen(np.array([[0, 1], [0, 0]]))
    except NumericsError:
        return
    raise AssertionError("Expected NumericsError")


def test_psd_sqrt_and_inverse():
    g = rng(4)
    h = random_density(3, g)
    root = psd_sqrt(h)
    assert np.allclose(root @ root, h, atol=1e-12)
    inv_root = psd_inverse_sqrt(h)
    assert np.allclose(inv_root @ h @ inv_root, np.eye(3), atol=1e-9)


def test_psd_sqrt_rejects_negative():
    try:
        psd_sqrt(np.diag([1.0, -0.5]))
    except NumericsError:
        return
    raise AssertionError("Expected NumericsError")


def test_pinv_on_singular_matrix():
    h = np.diag([2.0, 0.0, 0.5])
    assert np.allclose(pinv(h), np.diag([0.5, 0.0, 2.0]))


def test_complete_onb_keeps_columns():
    v = np.array([[1, 1], [1, -1], [0, 0]], dtype=complex) / np.sqrt(2)
    basis = complete_onb(v, 3)
    assert basis.shape == (3, 3)
    assert np.allclose(basis[:, :2], v)
    assert unitarity_violation(basis) < 1e-12


def test_complete_onb_rejects_non_orthonormal():
    try:
        complete_onb(np.array([[1, 1], [0, 1]], dtype=complex), 2)
    except NumericsError:
        return
    raise AssertionError("Expected NumericsError")


def test_normalize_phase():
    v = np.array([0.1, 1j * 0.9, 0.2])
    w = normalize_phase(v)
    assert abs(w[1] - 0.9) < 1e-12
    assert np.allclose(np.abs(w), np.abs(v))


def test_haar_unitary_is_unitary_and_reproducible():
    u1 = haar_unitary(5, rng(11))
    u2 = haar_unitary(5, rng(11))
    assert unitarity_violation(u1) < 1e-12
    assert np.array_equal(u1, u2)


def test_snap_unit_interval():
    values = snap_unit_interval([-1e-15, 1e-13, 0.5, 1 - 1e-14, 1 + 1e-15])
    assert values.tolist() == [0.0, 0.0, 0.5, 1.0, 1.0]


def test_contraction_sqrt_drops_roundoff():
    u = haar_unitary(3, rng(5))
    h = u @ np.diag([0.25, 3e-15, -8e-16]) @ u.conj().T
    expected = u @ np.diag([0.5, 0.0, 0.0]) @ u.conj().T
    assert np.linalg.norm(contraction_sqrt(h) - expected) < 1e-14
    assert np.count_nonzero(contraction_eigen(h).values) == 1


def test_contraction_eigen_rejects_values_outside_unit_interval():
    for values in ([0.5, 1.1], [0.5, -0.1]):
        try:
            contraction_eigen(np.diag(values))
        except NumericsError:
            continue
        raise AssertionError(f"Expected NumericsError for {values}")


if __name__ == "__main__":
    tests = [
        test_partial_trace_of_product,
        test_partial_trace_three_parties_keeps_order,
        test_partial_trace_rejects_bad_dims,
        test_partial_transpose_of_product,
        test_partial_transpose_detects_entanglement,
        test_schmidt_coefficients,
        test_kron_cap,
        test_herm_eigen_descending_and_reconstructs,
        test_herm_eigen_deterministic_on_degenerate_spectrum,
        test_herm_eigen_rejects_non_hermitian,
        test_psd_sqrt_and_inverse,
        test_psd_sqrt_rejects_negative,
        test_pinv_on_singular_matrix,
        test_complete_onb_keeps_columns,
        test_complete_onb_rejects_non_orthonormal,
        test_normalize_phase,
        test_haar_unitary_is_unitary_and_reproducible,
        test_snap_unit_interval,
        test_contraction_sqrt_drops_roundoff,
        test_contraction_eigen_rejects_values_outside_unit_interval,
    ]
    for test in tests:
        test()
        print(f"✓ {test.__name__}")
