#!/usr/bin/env python3
"""
Test minimum-error and optimal inconclusive measurements
"""

import dataclasses

import numpy as np

from state_discrimination.exceptions import MeasurementError
from state_discrimination.measurement import (
    FAILURE,
    avg_correct,
    avg_failure,
    check_me_optimality,
    dominance_check,
    filtered_srm,
    minimum_error,
    outcome_probs,
    refine_minimum_error,
    scaled_minimum_error,
    solve_oim,
    srm,
    unamb_threshold,
    validate_povm,
)
from state_discrimination.states import make_agu_set
from state_discrimination.symmetry import make_cyclic_group, make_rep, shift_rep

SEED = np.sqrt([0.5, 0.3, 0.2])


def cyclic_set(seed):
    group = make_cyclic_group(len(seed))
    return make_agu_set(group, shift_rep(group), np.asarray(seed, dtype=float))


def mixed_set():
    group = make_cyclic_group(2)
    rep = make_rep(group, [np.eye(4), np.diag([1, -1, 1, -1])])
    seeds = np.array([[0.5, 0.1], [0.4, 0.2], [0.1, 0.45], [0.2, 0.35]])
    return make_agu_set(group, rep, seeds / np.linalg.norm(seeds))


def fourier_magnitudes(seed):
    M = len(seed)
    omega = np.exp(2j * np.pi / M)
    return np.array([
        abs(sum(omega ** (j * k) * seed[j] for j in range(M))) / np.sqrt(M) for k in range(M)
    ])


def closed_form_table(x):
    """P[m, k] = (1/M) |sum_j x_j w^{j(m-k)}|^2 for filtered components x."""
    M = len(x)
    omega = np.exp(2j * np.pi / M)
    table = np.empty((M, M))
    for m in range(M):
        for k in range(M):
            table[m, k] = abs(sum(x[j] * omega ** (j * (m - k)) for j in range(M))) ** 2 / M
    return table


def test_outcome_labels():
    povm = srm(cyclic_set(SEED))
    assert povm.outcome_labels == ["0", "1", "2", FAILURE]
    assert np.allclose(povm.operator(FAILURE), 0)


def test_orthonormal_states_are_perfectly_distinguished():
    result = minimum_error(cyclic_set([1.0, 0.0, 0.0]))
    state_set = cyclic_set([1.0, 0.0, 0.0])
    assert result.method == "srm"
    assert abs(avg_correct(state_set, result.povm) - 1) < 1e-12


def test_srm_is_minimum_error_for_three_states():
    state_set = cyclic_set(SEED)
    result = minimum_error(state_set)
    assert result.method == "srm"
    assert result.residual <= 1e-8
    assert validate_povm(result.povm, state_set.rep) < 1e-10

    a = fourier_magnitudes(SEED)
    assert np.allclose(np.sort(a ** 2), [0.01717, 0.01717, 0.9657], atol=1e-4)
    expected = a.sum() ** 2 / 3
    assert abs(avg_correct(state_set, result.povm) - expected) < 1e-9
    assert abs(expected - 0.5165) < 1e-4

    table = outcome_probs(state_set, result.povm)
    assert np.allclose(table[:, :3], closed_form_table(a), atol=1e-9)
    assert np.allclose(table[:, 3], 0, atol=1e-12)


def test_me_certificate_rejects_failure_outcome():
    state_set = cyclic_set(SEED)
    oim = solve_oim(state_set, 0.2)
    try:
        check_me_optimality(state_set, oim.povm)
    except MeasurementError:
        return
    raise AssertionError("Expected MeasurementError")


def test_oim_at_zero_matches_minimum_error():
    state_set = cyclic_set(SEED)
    oim = solve_oim(state_set, 0.0)
    me = minimum_error(state_set)
    assert oim.certificate.method == "srm"
    assert oim.certificate.me_residual <= 1e-8
    assert abs(oim.correct_prob - avg_correct(state_set, me.povm)) < 1e-9


def test_oim_at_one_always_fails():
    state_set = cyclic_set(SEED)
    oim = solve_oim(state_set, 1.0)
    assert abs(oim.p_achieved - 1) < 1e-12
    assert abs(oim.correct_prob) < 1e-12


def test_water_filling_spectrum():
    state_set = cyclic_set(SEED)
    oim = solve_oim(state_set, 0.2)
    assert oim.certificate.method == "water-filling"
    assert abs(oim.p_achieved - 0.2) < 1e-9
    assert validate_povm(oim.povm, state_set.rep) < 1e-10

    a = fourier_magnitudes(SEED)
    # lam follows the character basis, which is element order for the shift rep
    x = a * np.sqrt(np.clip(1 - oim.lam, 0, 1))
    assert abs(np.sum(x ** 2) - 0.8) < 1e-9
    tau = x.max()
    assert np.all((np.abs(x - a) < 1e-9) | (np.abs(x - tau) < 1e-9))
    assert abs(oim.correct_prob - x.sum() ** 2 / 3) < 1e-9

    table = outcome_probs(state_set, oim.povm)
    assert np.allclose(table[:, :3], closed_form_table(x), atol=1e-9)
    assert np.allclose(table[:, 3], 0.2, atol=1e-9)


def test_correct_probability_decreases_with_failure():
    state_set = cyclic_set(SEED)
    values = [solve_oim(state_set, p).correct_prob for p in (0.0, 0.1, 0.3, 0.6)]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_unambiguous_threshold():
    state_set = cyclic_set(SEED)
    a = fourier_magnitudes(SEED)
    p_u = unamb_threshold(state_set)
    assert abs(p_u - (1 - 3 * np.min(a ** 2))) < 1e-9
    assert abs(p_u - 0.9485) < 1e-4

    oim = solve_oim(state_set, p_u)
    table = outcome_probs(state_set, oim.povm)
    off_diagonal = table[:, :3] - np.diag(np.diag(table[:, :3]))
    assert np.abs(off_diagonal).max() < 1e-9
    assert abs(oim.correct_prob - (1 - p_u)) < 1e-9


def test_unambiguous_threshold_of_orthonormal_states():
    assert unamb_threshold(cyclic_set([1.0, 0.0, 0.0])) < 1e-12


def test_unambiguous_threshold_requires_pure_states():
    try:
        unamb_threshold(mixed_set())
    except MeasurementError:
        return
    raise AssertionError("Expected MeasurementError")


def test_failure_probability_range():
    for p in (-0.1, 1.5):
        try:
            solve_oim(cyclic_set(SEED), p)
        except MeasurementError:
            continue
        raise AssertionError(f"Expected MeasurementError for p={p}")


def test_oim_requires_spanning_states():
    group = make_cyclic_group(2)
    rep = make_rep(group, [np.eye(3), np.diag([1, -1, 1])])
    state_set = make_agu_set(group, rep, np.array([0.8, 0.6, 0.0]))
    try:
        solve_oim(state_set, 0.2)
    except MeasurementError:
        return
    raise AssertionError("Expected MeasurementError")


def test_filtered_srm_is_complete():
    state_set = cyclic_set(SEED)
    povm = filtered_srm(state_set, 0.3 * np.eye(3))
    assert validate_povm(povm, state_set.rep) < 1e-10
    assert abs(avg_failure(state_set, povm) - 0.3) < 1e-12
    assert abs(avg_correct(state_set, povm) - 0.7 * avg_correct(state_set, srm(state_set))) < 1e-12


def test_dominance_over_random_povms():
    for seed in (np.sqrt([0.7, 0.3]), SEED):
        state_set = cyclic_set(seed)
        for p in (0.1, 0.3):
            oim = solve_oim(state_set, p, dominance_draws=500, rng_seed=3)
            dominance = oim.certificate.dominance
            assert dominance.draws == 500
            assert dominance.passed, f"random POVM beats OIM by {dominance.max_excess:.2e}"


def test_mixed_set_uses_numerical_solver():
    state_set = mixed_set()
    me = minimum_error(state_set)
    srm_correct = avg_correct(state_set, srm(state_set))
    oim = solve_oim(state_set, 0.1, restarts=4, rng_seed=0)
    assert oim.certificate.method in ("slsqp", "scaled-minimum-error")
    assert oim.certificate.feasible_candidates >= 1
    assert abs(oim.p_achieved - 0.1) <= 1e-6
    assert validate_povm(oim.povm, state_set.rep) < 1e-9
    assert oim.correct_prob >= 0.9 * srm_correct - 1e-9
    assert oim.correct_prob <= avg_correct(state_set, me.povm) + 1e-9


def test_mixed_set_solver_is_deterministic():
    first = solve_oim(mixed_set(), 0.1, restarts=3, rng_seed=5)
    second = solve_oim(mixed_set(), 0.1, restarts=3, rng_seed=5)
    assert first.correct_prob == second.correct_prob
    assert np.array_equal(first.lam, second.lam)


def test_dominance_check_flags_suboptimal_solution():
    state_set = cyclic_set(SEED)
    oim = solve_oim(state_set, 0.2)
    weakened = dataclasses.replace(oim, correct_prob=0.0)
    result = dominance_check(state_set, weakened, 50, np.random.Generator(np.random.Philox(1)))
    assert not result.passed


def test_swapped_detection_vectors_fail_certificate():
    state_set = cyclic_set(SEED)
    povm = srm(state_set)
    swapped = dataclasses.replace(povm, conclusive=povm.conclusive[[1, 0, 2]])
    assert validate_povm(swapped) < 1e-10
    assert check_me_optimality(state_set, swapped) > 0.01


def test_mixed_set_needs_refinement():
    state_set = mixed_set()
    assert check_me_optimality(state_set, srm(state_set)) > 1e-8
    me = minimum_error(state_set)
    assert me.method == "srm+refinement"
    assert me.iterations > 0
    assert me.residual <= 1e-8
    assert validate_povm(me.povm, state_set.rep) < 1e-9
    assert avg_correct(state_set, me.povm) >= avg_correct(state_set, srm(state_set)) - 1e-12


def test_refinement_keeps_certified_povm():
    state_set = cyclic_set(SEED)
    refined, _ = refine_minimum_error(state_set, srm(state_set), max_iter=50)
    assert check_me_optimality(state_set, refined) <= 1e-8
    assert abs(avg_correct(state_set, refined) - avg_correct(state_set, srm(state_set))) < 1e-10


def test_oim_at_zero_uses_refined_minimum_error():
    state_set = mixed_set()
    me = minimum_error(state_set)
    oim = solve_oim(state_set, 0.0, me=me)
    assert oim.certificate.method == "srm+refinement"
    assert oim.certificate.me_residual == me.residual
    assert oim.correct_prob >= avg_correct(state_set, me.povm) - 1e-12
    assert oim.correct_prob > avg_correct(state_set, srm(state_set))
    assert np.array_equal(oim.povm.failure, np.zeros((4, 4)))


def test_scaled_minimum_error():
    state_set = mixed_set()
    me = minimum_error(state_set)
    scaled = scaled_minimum_error(me.povm, 0.3)
    assert validate_povm(scaled, state_set.rep) < 1e-10
    assert abs(avg_failure(state_set, scaled) - 0.3) < 1e-12
    assert abs(avg_correct(state_set, scaled) - 0.7 * avg_correct(state_set, me.povm)) < 1e-12
    assert scaled.vectors.shape == me.povm.vectors.shape


def test_mixed_oim_never_below_scaled_minimum_error():
    state_set = mixed_set()
    me = minimum_error(state_set)
    for p in (0.05, 0.1):
        oim = solve_oim(state_set, p, restarts=3, rng_seed=0, me=me)
        assert oim.certificate.method in ("slsqp", "scaled-minimum-error")
        assert oim.correct_prob >= (1 - p) * avg_correct(state_set, me.povm) - 1e-9, f"p={p}"


if __name__ == "__main__":
    tests = [
        test_outcome_labels,
        test_orthonormal_states_are_perfectly_distinguished,
        test_srm_is_minimum_error_for_three_states,
        test_me_certificate_rejects_failure_outcome,
        test_oim_at_zero_matches_minimum_error,
        test_oim_at_one_always_fails,
        test_water_filling_spectrum,
        test_correct_probability_decreases_with_failure,
        test_unambiguous_threshold,
        test_unambiguous_threshold_of_orthonormal_states,
        test_unambiguous_threshold_requires_pure_states,
        test_failure_probability_range,
        test_oim_requires_spanning_states,
        test_filtered_srm_is_complete,
        test_dominance_over_random_povms,
        test_mixed_set_uses_numerical_solver,
        test_mixed_set_solver_is_deterministic,
        test_dominance_check_flags_suboptimal_solution,
        test_swapped_detection_vectors_fail_certificate,
        test_mixed_set_needs_refinement,
        test_refinement_keeps_certified_povm,
        test_oim_at_zero_uses_refined_minimum_error,
        test_scaled_minimum_error,
        test_mixed_oim_never_below_scaled_minimum_error,
    ]
    for test in tests:
        test()
        print(f"✓ {test.__name__}")
