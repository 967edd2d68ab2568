#!/usr/bin/env python3
"""
Test the projective dilation of the inconclusive measurement
"""

import dataclasses

import numpy as np

from state_discrimination.dilation import build_dilation, verify_dilation
from state_discrimination.exceptions import DilationError
from state_discrimination.measurement import filtered_srm, minimum_error, outcome_probs, solve_oim, unamb_threshold
from state_discrimination.states import make_agu_set
from state_discrimination.symmetry import AbelianGroup, make_cyclic_group, make_rep, shift_rep

SEED = np.sqrt([0.5, 0.3, 0.2])


def cyclic_set(seed, orders=None):
    group = AbelianGroup(orders) if orders else make_cyclic_group(len(seed))
    return make_agu_set(group, shift_rep(group), np.asarray(seed, dtype=float))


def mixed_set():
    group = make_cyclic_group(2)
    rep = make_rep(group, [np.eye(4), np.diag([1, -1, 1, -1])])
    seeds = np.array([[0.5, 0.1], [0.4, 0.2], [0.1, 0.45], [0.2, 0.35]])
    return make_agu_set(group, rep, seeds / np.linalg.norm(seeds))


def dilate(state_set, p, **kwargs):
    oim = solve_oim(state_set, p, **kwargs)
    me = minimum_error(state_set)
    return build_dilation(state_set, oim, me.povm), oim


def test_dimensions():
    dil, _ = dilate(cyclic_set(SEED), 0.2)
    assert dil.n_vectors == 3
    assert dil.dim_ex == 6
    assert dil.omega.shape == (6, 6)
    assert dil.index(1, 2, 0) == 5
    assert np.allclose(dil.omega_vector(0, 1, 0), dil.omega[:, 1])


def test_three_state_dilation_identities():
    state_set = cyclic_set(SEED)
    dil, oim = dilate(state_set, 0.2)
    report = verify_dilation(dil, state_set, oim)
    for name, value in report.as_dict().items():
        assert value <= 1e-9, f"{name} residual {value:.3e}"
    assert report.max_residual() <= 1e-9


def test_outcome_projectors_are_orthogonal_and_complete():
    dil, _ = dilate(cyclic_set(SEED), 0.2)
    projectors = dil.outcome_projectors()
    assert projectors.shape == (4, 6, 6)
    for i, a in enumerate(projectors):
        for j, b in enumerate(projectors):
            if i != j:
                assert np.linalg.norm(a @ b) < 1e-9
    ranks = [int(round(np.trace(p).real)) for p in projectors]
    assert ranks == [1, 1, 1, 3]


def test_lifted_statistics_match_oim():
    state_set = cyclic_set(SEED)
    dil, oim = dilate(state_set, 0.3)
    embedded = dil.embed_states(state_set)
    lifted = np.einsum("mij,xji->mx", embedded, dil.outcome_projectors()).real
    assert np.allclose(lifted, outcome_probs(state_set, oim.povm), atol=1e-9)


def test_endpoints_and_threshold():
    state_set = cyclic_set(SEED)
    for p in (0.0, unamb_threshold(state_set), 1.0):
        dil, oim = dilate(state_set, p)
        assert verify_dilation(dil, state_set, oim).max_residual() <= 1e-9, f"p={p}"


def test_failure_spectrum_is_exact_at_zero():
    state_set = cyclic_set(SEED)
    dil, oim = dilate(state_set, 0.0)
    assert np.array_equal(oim.povm.failure, np.zeros((3, 3)))
    assert np.array_equal(dil.schatten_values, np.zeros(3))
    report = verify_dilation(dil, state_set, oim)
    assert report.covariance <= 1e-12
    assert report.pf1 <= 1e-12


def test_roundoff_in_failure_operator_is_discarded():
    state_set = cyclic_set(SEED)
    noise = np.random.Generator(np.random.Philox(4)).standard_normal((3, 3))
    povm = filtered_srm(state_set, 1e-15 * (noise + noise.T))
    assert np.array_equal(povm.failure, np.zeros((3, 3)))
    assert np.linalg.norm(povm.operators().sum(axis=0) - np.eye(3)) < 1e-12


def test_dilation_residuals_stay_near_machine_precision():
    state_set = cyclic_set(SEED)
    for p in (0.0, 0.2):
        dil, oim = dilate(state_set, p)
        report = verify_dilation(dil, state_set, oim)
        assert report.max_residual() <= 1e-10, f"p={p}: {report.as_dict()}"


def test_phase_flipped_vector_breaks_covariance():
    state_set = cyclic_set(SEED)
    dil, oim = dilate(state_set, 0.2)
    omega = dil.omega.copy()
    omega[:, dil.index(0, 1, 0)] *= -1
    flipped = dataclasses.replace(dil, omega=omega)
    report = verify_dilation(flipped, state_set, oim)
    assert report.onb <= 1e-9
    assert report.compression <= 1e-9
    assert report.covariance > 0.1


def test_product_group_dilation():
    state_set = cyclic_set(np.sqrt([0.4, 0.3, 0.2, 0.1]), orders=(2, 2))
    dil, oim = dilate(state_set, 0.2)
    assert dil.dim_ex == 8
    assert verify_dilation(dil, state_set, oim).max_residual() <= 1e-9


def test_mixed_state_dilation():
    state_set = mixed_set()
    dil, oim = dilate(state_set, 0.1, restarts=2)
    assert dil.rank == 2
    assert dil.dim_ex == 8
    assert verify_dilation(dil, state_set, oim).max_residual() <= 1e-9


def test_rejects_non_covariant_povm():
    state_set = cyclic_set(SEED)
    oim = solve_oim(state_set, 0.2)
    me = minimum_error(state_set)
    broken = dataclasses.replace(oim, povm=dataclasses.replace(oim.povm, covariant=False))
    try:
        build_dilation(state_set, broken, me.povm)
    except DilationError:
        return
    raise AssertionError("Expected DilationError")


def test_rejects_missing_minimum_error_vectors():
    state_set = cyclic_set(SEED)
    oim = solve_oim(state_set, 0.2)
    me = minimum_error(state_set)
    try:
        build_dilation(state_set, oim, dataclasses.replace(me.povm, vectors=None))
    except DilationError:
        return
    raise AssertionError("Expected DilationError")


if __name__ == "__main__":
    tests = [
        test_dimensions,
        test_three_state_dilation_identities,
        test_outcome_projectors_are_orthogonal_and_complete,
        test_lifted_statistics_match_oim,
        test_endpoints_and_threshold,
        test_failure_spectrum_is_exact_at_zero,
        test_roundoff_in_failure_operator_is_discarded,
        test_dilation_residuals_stay_near_machine_precision,
        test_phase_flipped_vector_breaks_covariance,
        test_product_group_dilation,
        test_mixed_state_dilation,
        test_rejects_non_covariant_povm,
        test_rejects_missing_minimum_error_vectors,
    ]
    for test in tests:
        test()
        print(f"✓ {test.__name__}")
