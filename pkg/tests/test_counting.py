"""Counting circuit, kernels, window formulas, and the t estimator."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (
    brute_force_count_distribution,
    dft_matrix,
    random_marked,
    random_state,
)
from entgrover import (
    DegenerateCaseError,
    GoodSet,
    ancilla_distribution,
    build_count_state,
    error_bound,
    estimate_from_outcome,
    kernel_s,
    moments,
    new_flat,
    qft,
    qft_inverse,
    run_count,
    window_probability,
)

SIGMA_LOW = 8.0 / math.pi**2


class TestQft:
    def test_basis_vector_to_uniform(self):
        out = qft(np.array([1, 0, 0, 0], dtype=complex))
        np.testing.assert_allclose(out, [0.5] * 4, atol=1e-14)

    def test_uniform_to_basis(self):
        out = qft(np.full(4, 0.5, dtype=complex))
        np.testing.assert_allclose(out, [1, 0, 0, 0], atol=1e-14)

    def test_round_trip(self):
        rng = np.random.default_rng(3)
        v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        np.testing.assert_allclose(qft_inverse(qft(v)), v, atol=1e-12)

    @pytest.mark.parametrize("p", [1, 2, 4, 8, 32, 64])
    def test_matches_dft_matrix(self, p):
        rng = np.random.default_rng(p)
        v = rng.standard_normal(p) + 1j * rng.standard_normal(p)
        np.testing.assert_allclose(qft(v), dft_matrix(p, +1) @ v, atol=1e-12)

    def test_unitary(self):
        rng = np.random.default_rng(9)
        v = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        assert np.linalg.norm(qft(v)) == pytest.approx(np.linalg.norm(v), abs=1e-12)

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError, match="power of two"):
            qft(np.ones(3, dtype=complex))


class TestBuildCountState:
    def test_p1_trivial_ancilla(self):
        cs = build_count_state(new_flat(2, 1), GoodSet((0,)), 1)
        np.testing.assert_allclose(ancilla_distribution(cs), [1.0])

    def test_total_norm_one(self):
        state = random_state(4, 2, seed=14)
        cs = build_count_state(state, random_marked(16, 5, seed=141), 16)
        assert ancilla_distribution(cs).sum() == pytest.approx(1.0, abs=1e-9)

    def test_flat_spectrum_symmetric(self):
        cs = build_count_state(new_flat(4, 1), GoodSet((0, 1, 2, 3)), 16)
        dist = ancilla_distribution(cs)
        for m in range(1, 16):
            assert dist[m] == pytest.approx(dist[16 - m], abs=1e-9)

    @pytest.mark.parametrize("nq,d,t,p,seed", [(2, 1, 1, 8, 0), (3, 2, 3, 16, 1), (4, 3, 7, 8, 2)])
    def test_matches_dense_oracle(self, nq, d, t, p, seed):
        state = random_state(nq, d, seed)
        good = random_marked(1 << nq, t, seed + 50)
        dist = ancilla_distribution(build_count_state(state, good, p))
        oracle = brute_force_count_distribution(state, good, p)
        np.testing.assert_allclose(dist, oracle, atol=1e-12)

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError, match="power of two"):
            build_count_state(new_flat(2, 1), GoodSet((0,)), 3)


class TestAncillaDistribution:
    def test_peaks_near_line(self):
        # N=4, t=1: f = P*theta/pi = 4/3, peaks at 1 and 7
        dist = ancilla_distribution(build_count_state(new_flat(2, 1), GoodSet((0,)), 8))
        assert int(np.argmax(dist)) in {1, 2, 6, 7}

    def test_window_mass_majority(self):
        dist = ancilla_distribution(
            build_count_state(new_flat(4, 1), GoodSet((0, 1, 2, 3)), 16)
        )
        assert sum(dist[m] for m in (2, 3, 13, 14)) > 0.5


class TestKernel:
    def test_limit_at_zero(self):
        assert kernel_s(0, 0.0, 8, +1) == 1.0
        assert kernel_s(2, 2.0, 8, -1) == 1.0

    def test_integer_offsets_vanish(self):
        assert kernel_s(3, 1.0, 16, +1) == pytest.approx(0.0, abs=1e-15)
        assert kernel_s(5, 2.0, 16, -1) == pytest.approx(0.0, abs=1e-15)

    def test_bounded_by_one(self):
        rng = np.random.default_rng(20)
        for _ in range(300):
            p = int(rng.choice([4, 8, 16, 32]))
            f = float(rng.uniform(0, p / 2))
            m = int(rng.integers(0, p))
            assert abs(kernel_s(m, f, p, +1)) <= 1.0 + 1e-12
            assert abs(kernel_s(m, f, p, -1)) <= 1.0 + 1e-12

    def test_per_outcome_law_against_circuit(self):
        # for real coefficient tables (Im <G|B> = 0) each outcome away from
        # 0 and P/2 carries exactly [sin^2 <G|G> + cos^2 <B|B>] (s+^2 + s-^2)/2
        from entgrover import from_amplitudes

        rng = np.random.default_rng(5)
        state = from_amplitudes(rng.standard_normal((16, 2)), renormalize=True)
        good = random_marked(16, 4, seed=771)
        p_size = 16
        m = moments(state, good)
        f = p_size * m.theta / math.pi
        mix = math.sin(m.theta) ** 2 * m.g_norm2 + math.cos(m.theta) ** 2 * m.b_norm2
        dist = ancilla_distribution(build_count_state(state, good, p_size))
        for outcome in range(p_size):
            if outcome in (0, p_size // 2):
                continue
            ks = kernel_s(outcome, f, p_size, +1) ** 2 + kernel_s(outcome, f, p_size, -1) ** 2
            assert dist[outcome] == pytest.approx(mix * ks / 2.0, abs=1e-9)

    def test_mirror_pair_law_for_complex_states(self):
        # complex tables shift mass between m and P-m; the pair sum still
        # follows the kernel law exactly
        state = random_state(4, 2, seed=77)
        good = random_marked(16, 4, seed=771)
        p_size = 16
        m = moments(state, good)
        f = p_size * m.theta / math.pi
        mix = math.sin(m.theta) ** 2 * m.g_norm2 + math.cos(m.theta) ** 2 * m.b_norm2
        dist = ancilla_distribution(build_count_state(state, good, p_size))
        for outcome in range(1, p_size // 2):
            ks = sum(
                kernel_s(o, f, p_size, sign) ** 2
                for o in (outcome, p_size - outcome)
                for sign in (+1, -1)
            )
            pair = float(dist[outcome] + dist[p_size - outcome])
            assert pair == pytest.approx(mix * ks / 2.0, abs=1e-9)


class TestWindowProbability:
    def test_flat_interior_case(self):
        pred = window_probability(moments(new_flat(4, 1), GoodSet((0, 1, 2, 3))), 16)
        assert pred.case == "interior"
        assert pred.outcomes == (2, 3, 13, 14)
        assert pred.mass > 0.5
        assert SIGMA_LOW < pred.sigma <= 1.0

    @pytest.mark.parametrize(
        "nq,d,t,p,seed,case",
        [
            (4, 3, 4, 16, 1, "interior"),
            (6, 1, 1, 8, 2, "low"),
            (4, 2, 15, 8, 3, "high"),
            (3, 1, 4, 8, 4, "exact"),
            (4, 4, 3, 32, 5, "interior"),
            (5, 2, 7, 16, 6, "interior"),
            (6, 2, 3, 16, 7, "interior"),
        ],
    )
    def test_all_cases_match_circuit(self, nq, d, t, p, seed, case):
        state = random_state(nq, d, seed)
        good = random_marked(1 << nq, t, seed + 30)
        pred = window_probability(moments(state, good), p)
        assert pred.case == case
        dist = brute_force_count_distribution(state, good, p)
        mass = float(sum(dist[m] for m in pred.outcomes))
        assert pred.mass == pytest.approx(mass, abs=1e-9)

    def test_degenerate_sector_rejected(self):
        with pytest.raises(DegenerateCaseError):
            window_probability(moments(new_flat(2, 1), GoodSet(())), 8)

    def test_small_p_rejected(self):
        with pytest.raises(ValueError, match="P"):
            window_probability(moments(new_flat(2, 1), GoodSet((0,))), 2)

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_sigma_bounds_property(self, seed):
        rng = np.random.default_rng(seed)
        p = int(rng.choice([8, 16, 32, 64]))
        f_int = float(rng.uniform(1, p / 2 - 1))
        f_low = float(rng.uniform(1e-9, 1 - 1e-9))
        f_high = float(rng.uniform(p / 2 - 1 + 1e-9, p / 2 - 1e-9))
        fl = math.floor(f_int)
        s1 = sum(kernel_s(m, f_int, p, +1) ** 2 for m in (fl, fl + 1, p - fl - 1, p - fl))
        s2 = sum(kernel_s(m, f_low, p, +1) ** 2 for m in (0, 1, p - 1))
        s3 = sum(kernel_s(m, f_high, p, +1) ** 2 for m in (p // 2, p // 2 - 1, p // 2 + 1))
        for s in (s1, s2, s3):
            assert SIGMA_LOW < s <= 1.0 + 1e-12


class TestEstimate:
    def test_zero_outcome(self):
        est = estimate_from_outcome(0, 16, 16)
        assert est.t_tilde == 0.0
        assert est.case_label == "low"

    def test_half_p_outcome(self):
        est = estimate_from_outcome(8, 16, 16)
        assert est.t_tilde == pytest.approx(16.0, abs=1e-12)
        assert est.case_label == "high"

    def test_window_values_n16_p16(self):
        t_for = {m: estimate_from_outcome(m, 16, 16).t_tilde for m in (2, 3, 13, 14)}
        assert t_for[2] == pytest.approx(16 * math.sin(math.pi * 2 / 16) ** 2, abs=1e-12)
        assert t_for[2] == pytest.approx(2.3431, abs=1e-4)
        assert t_for[3] == pytest.approx(4.9385, abs=1e-4)
        assert t_for[13] == t_for[3] and t_for[14] == t_for[2]
        bound = error_bound(4, 16, 16)
        for v in t_for.values():
            assert abs(v - 4) <= bound

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            estimate_from_outcome(16, 16, 16)


class TestErrorBound:
    def test_reference_value(self):
        expected = math.pi * 16 * (math.pi / 16 + 2 * math.sqrt(4 / 16)) / 16
        assert expected == pytest.approx(3.7584, abs=1e-4)
        assert error_bound(4, 16, 16) == pytest.approx(expected, abs=1e-15)

    def test_t_zero(self):
        assert error_bound(0, 8, 16) == pytest.approx(math.pi**2 * 16 / 64, abs=1e-12)

    def test_monotone_in_p(self):
        for t in (0, 1, 4, 16):
            bounds = [error_bound(t, p, 64) for p in (8, 16, 32, 64, 128)]
            assert bounds == sorted(bounds, reverse=True)

    def test_doubling_p_tightens_window_spread(self):
        # on the uniform family the worst window decode error shrinks with P
        good = GoodSet((0, 1, 2, 3))
        m = moments(new_flat(4, 1), good)
        spreads = []
        for p in (16, 32, 64):
            pred = window_probability(m, p)
            spreads.append(
                max(abs(estimate_from_outcome(o, p, 16).t_tilde - 4) for o in pred.outcomes)
            )
        assert spreads[0] >= spreads[1] >= spreads[2]


class TestRunCount:
    def test_deterministic(self):
        a = run_count(new_flat(3, 1), GoodSet((0,)), 8, 25, seed=5)
        b = run_count(new_flat(3, 1), GoodSet((0,)), 8, 25, seed=5)
        assert a == b

    def test_single_repetition(self):
        report = run_count(new_flat(3, 1), GoodSet((0,)), 8, 1, seed=5)
        assert len(report.outcomes) == 1

    def test_flat_n16_majority_in_window(self):
        report = run_count(new_flat(4, 1), GoodSet((0, 1, 2, 3)), 16, 101, seed=7)
        assert report.case == "interior"
        assert report.majority_m in (2, 3, 13, 14)
        assert report.w_empirical > 0.5
        assert report.bound_satisfied
        assert report.bound == pytest.approx(3.7584, abs=1e-4)

    def test_t_zero_stays_at_origin(self):
        report = run_count(new_flat(4, 1), GoodSet(()), 8, 11, seed=3)
        assert report.case == "degenerate"
        assert report.majority_m == 0
        assert report.majority_t == 0.0
        assert set(report.outcomes) == {0}

    def test_t_full_lands_at_half_p(self):
        report = run_count(new_flat(2, 1), GoodSet((0, 1, 2, 3)), 8, 11, seed=3)
        assert report.majority_m == 4
        assert report.majority_t == pytest.approx(4.0, abs=1e-12)

    def test_json_schema_keys(self):
        report = run_count(new_flat(3, 1), GoodSet((0,)), 8, 5, seed=1)
        obj = report.to_json_obj()
        for key in ("P", "N", "t_true", "case", "W_predicted", "W_empirical",
                    "outcomes", "majority_t", "bound", "bound_satisfied"):
            assert key in obj

    def test_estimator_sound_on_window_outcomes(self):
        # every possible window outcome decodes within the stated bound
        for nq in (4, 5):
            n = 1 << nq
            flat = new_flat(nq, 1)
            for t in (1, 2, n // 4):
                good = GoodSet(tuple(range(t)))
                for p in (16, 32):
                    pred = window_probability(moments(flat, good), p)
                    bound = error_bound(t, p, n)
                    for outcome in pred.outcomes:
                        est = estimate_from_outcome(outcome, p, n)
                        assert abs(est.t_tilde - t) <= bound
