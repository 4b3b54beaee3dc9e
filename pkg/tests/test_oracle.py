import json

import numpy as np
import pytest

from cutpaste import (
    CharacteristicPair,
    Coloring,
    DirichletProductMeasure,
    FiniteAtomicMeasure,
    FlipRates,
    check_consistent,
    check_detailed_balance,
    check_exchangeable,
    check_stationary,
    compare_monte_carlo,
    dirichlet_kernel,
    dirichlet_stationary_colorings,
    discrete_kernel,
    ehrenfest_kernel,
    first_jump_comparison,
    generator_kernel,
    mixing_profile,
)
from cutpaste.oracle import ExactKernel, measure_step_simulator


def w(s, k=2):
    return Coloring.from_string(s, k=k)


class TestExactKernelType:
    def test_transition_rows_validated(self):
        with pytest.raises(ValueError):
            ExactKernel(k=2, n=1, kind="transition", matrix=[[0.5, 0.4], [0.5, 0.5]])

    def test_generator_rows_validated(self):
        with pytest.raises(ValueError):
            ExactKernel(k=2, n=1, kind="generator", matrix=[[-1.0, 0.9], [1.0, -1.0]])

    def test_indexing(self):
        kern = dirichlet_kernel(2, 2, 1.0)
        assert kern.index(w("11")) == 0
        assert kern.index(w("21")) == 2
        assert kern.state(3) == w("22")
        assert kern.label(1) == "12"


class TestCheckExchangeable:
    def test_dirichlet_kernel_passes(self):
        rep = check_exchangeable(dirichlet_kernel(3, 2, 1.0))
        assert rep.passed and rep.max_deviation <= 1e-12

    def test_full_permutation_mode(self):
        rep = check_exchangeable(dirichlet_kernel(3, 2, 2.0), full=True)
        assert rep.passed
        assert rep.info["permutations"] == 6

    def test_coordinate_biased_kernel_fails_with_witness(self):
        # always flip coordinate 1, keep coordinate 2: not exchangeable
        P = np.zeros((4, 4))
        # states 11,12,21,22; image flips the first coordinate only
        P[0, 2] = P[1, 3] = P[2, 0] = P[3, 1] = 1.0
        rep = check_exchangeable(ExactKernel(k=2, n=2, kind="transition", matrix=P))
        assert not rep.passed
        assert rep.witness is not None and "sigma" in rep.witness

    def test_one_atom_generator_passes(self):
        pair = CharacteristicPair(
            FiniteAtomicMeasure([([[0.7, 0.3], [0.4, 0.6]], 1.0)]),
            FlipRates.constant(2, 0.3),
        )
        rep = check_exchangeable(generator_kernel(3, pair))
        assert rep.passed


class TestCheckConsistent:
    def test_dirichlet_alpha_two(self):
        rep = check_consistent(dirichlet_kernel(2, 2, 2.0), dirichlet_kernel(1, 2, 2.0))
        assert rep.passed

    def test_finite_atomic_product_structure(self):
        sigma = FiniteAtomicMeasure(
            [([[0.7, 0.3], [0.4, 0.6]], 1.0), ([[0.9, 0.1], [0.2, 0.8]], 0.5)]
        )
        for m in (1, 2, 3):
            rep = check_consistent(discrete_kernel(m + 1, sigma), discrete_kernel(m, sigma))
            assert rep.passed

    def test_generator_consistency(self):
        pair = CharacteristicPair(
            FiniteAtomicMeasure([([[0.7, 0.3], [0.4, 0.6]], 1.0)]),
            FlipRates([[0.0, 0.5], [0.25, 0.0]]),
        )
        rep = check_consistent(generator_kernel(2, pair), generator_kernel(1, pair))
        assert rep.passed

    def test_ehrenfest_fails_with_projected_self_transition(self):
        rep = check_consistent(ehrenfest_kernel(3), ehrenfest_kernel(2))
        assert not rep.passed
        # witness: projection keeps the state with probability (n+2)/(2n+2) = 2/3
        assert rep.witness["marginal"] == pytest.approx(2 / 3, abs=1e-12)
        assert rep.witness["coarse_value"] == pytest.approx(0.5, abs=1e-15)
        assert rep.max_deviation == pytest.approx(1 / 6, abs=1e-12)

    def test_report_serializes(self):
        rep = check_consistent(ehrenfest_kernel(3), ehrenfest_kernel(2))
        parsed = json.loads(rep.to_json())
        assert parsed["passed"] is False


class TestEhrenfestKernel:
    def test_single_coordinate(self):
        assert np.allclose(ehrenfest_kernel(1).matrix, [[0.5, 0.5], [0.5, 0.5]])

    def test_two_coordinates(self):
        P = ehrenfest_kernel(2).matrix
        assert np.allclose(np.diag(P), 0.5)
        assert P[0, 1] == pytest.approx(0.25)
        assert P[0, 2] == pytest.approx(0.25)
        assert P[0, 3] == 0.0

    def test_exchangeable_but_not_consistent(self):
        for n in (2, 3):
            assert check_exchangeable(ehrenfest_kernel(n)).passed
        assert not check_consistent(ehrenfest_kernel(3), ehrenfest_kernel(2)).passed


class TestDetailedBalanceAndStationarity:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("k,n", [(2, 2), (2, 3), (3, 2), (3, 3)])
    def test_dirichlet_family_reversible(self, k, n, alpha):
        kern = dirichlet_kernel(n, k, alpha)
        lam = dirichlet_stationary_colorings(n, k, alpha)
        assert check_detailed_balance(kern, lam, tol=1e-10).passed
        assert check_stationary(kern, lam, tol=1e-10).passed

    def test_witness_on_violation(self):
        kern = ehrenfest_kernel(2)
        lam = np.array([0.7, 0.1, 0.1, 0.1])
        rep = check_detailed_balance(kern, lam, tol=1e-12)
        assert not rep.passed and rep.witness is not None


class TestCompareMonteCarlo:
    def test_dirichlet_chain_agrees(self, rng):
        sigma = DirichletProductMeasure(2.0, 2)
        kern = dirichlet_kernel(2, 2, 2.0)
        report = compare_monte_carlo(kern, measure_step_simulator(sigma),
                                     200_000, 4.5, rng)
        assert report.passed, report.to_dict()

    def test_deterministic_kernel_zero_entries(self, rng):
        swap = FiniteAtomicMeasure([([[0, 1], [1, 0]], 1.0)])
        kern = discrete_kernel(2, swap)
        report = compare_monte_carlo(kern, measure_step_simulator(swap),
                                     4000, 4.0, rng)
        assert report.passed
        assert report.max_abs_z == 0.0

    def test_wrong_simulator_detected(self, rng):
        kern = dirichlet_kernel(2, 2, 2.0)
        biased = measure_step_simulator(DirichletProductMeasure(8.0, 2))
        report = compare_monte_carlo(kern, biased, 200_000, 4.0, rng)
        assert not report.passed

    def test_insufficient_power_reported(self, rng):
        sigma = FiniteAtomicMeasure(
            [([[0.999, 0.001], [0.001, 0.999]], 1.0)]
        )
        kern = discrete_kernel(1, sigma)
        report = compare_monte_carlo(kern, measure_step_simulator(sigma), 200, 4.0, rng)
        assert report.insufficient
        assert not report.passed

    def test_bonferroni_bound_in_info(self, rng):
        sigma = DirichletProductMeasure(1.0, 2)
        kern = dirichlet_kernel(1, 2, 1.0)
        report = compare_monte_carlo(kern, measure_step_simulator(sigma), 20_000, 4.0, rng)
        assert 0 < report.info["bonferroni_family_bound"] < 1


class TestFirstJumpComparison:
    def test_zero_rate_pair(self, rng):
        pair = CharacteristicPair(None, FlipRates.zero(2))
        kern = generator_kernel(1, pair)
        report = first_jump_comparison(kern, pair, w("1"), 200, 3.0, rng, horizon=1.0)
        assert report.passed
        assert report.info["total_rate"] == 0.0

    def test_reports_bias_bound(self, rng):
        pair = CharacteristicPair(
            FiniteAtomicMeasure([([[0.7, 0.3], [0.4, 0.6]], 1.0)]), FlipRates.zero(2)
        )
        kern = generator_kernel(2, pair)
        report = first_jump_comparison(kern, pair, w("11"), 5000, 4.5, rng)
        assert report.info["relative_bias_bound"] == pytest.approx(0.005)
        assert "12" in report.info["estimates"]


class TestMixingProfile:
    def test_initial_distance(self):
        kern = dirichlet_kernel(2, 2, 1.0)
        lam = dirichlet_stationary_colorings(2, 2, 1.0)
        prof = mixing_profile(kern, w("11"), lam, max_steps=0)
        assert prof[0] == pytest.approx(1 - lam[0], abs=1e-15)

    def test_monotone_decrease_below_threshold(self):
        kern = dirichlet_kernel(2, 2, 1.0)
        lam = dirichlet_stationary_colorings(2, 2, 1.0)
        prof = mixing_profile(kern, w("11"), lam, max_steps=200, threshold=1e-6)
        assert (np.diff(prof) <= 1e-15).all()
        assert prof[-1] < 1e-6
        assert len(prof) < 60

    def test_identity_kernel_never_mixes(self):
        ident = FiniteAtomicMeasure([(np.eye(2), 1.0)], allow_identity=True)
        kern = discrete_kernel(2, ident)
        lam = np.full(4, 0.25)
        prof = mixing_profile(kern, w("12"), lam, max_steps=10)
        assert np.allclose(prof, prof[0])
