"""End-to-end verification criteria: closed forms vs the exact simulator.

Each check pits an analytic prediction against brute-force state-vector
simulation (or an independently stated bound) at a pinned tolerance and
returns a CheckResult.  The same battery backs the ``verify`` CLI command
and the acceptance test suite, so a criterion is stated exactly once.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import analytic, counting, grover, qstate

SIGMA_LOW = counting.SIGMA_LOWER_BOUND
AVG_THRESHOLD = math.pi**2 / (8.0 * math.sqrt(2.0))


@dataclass(frozen=True)
class Tolerances:
    amplitude: float = 1e-9
    probability: float = 1e-9
    unitarity: float = 1e-12

    def to_json_obj(self) -> dict:
        return {
            "amplitude": self.amplitude,
            "probability": self.probability,
            "unitarity": self.unitarity,
        }


@dataclass(frozen=True)
class VerifyConfig:
    """Sizes and seeds for the verification battery; defaults are the full battery."""

    corpus_count: int = 100
    n_qubits_list: tuple[int, ...] = (2, 3, 4, 6)
    data_dims: tuple[int, ...] = (1, 2, 4)
    max_steps: int = 50
    base_seed: int = 20260808
    sweep_n_qubits: tuple[int, ...] = (4, 6)
    sweep_p_sizes: tuple[int, ...] = (16, 32, 64)
    majority_repetitions: int = 101
    sigma_samples: int = 1000
    averages_cases: int = 50
    tolerances: Tolerances = field(default_factory=Tolerances)

    def to_json_obj(self) -> dict:
        return {
            "corpus_count": self.corpus_count,
            "n_qubits_list": list(self.n_qubits_list),
            "data_dims": list(self.data_dims),
            "max_steps": self.max_steps,
            "base_seed": self.base_seed,
            "sweep_n_qubits": list(self.sweep_n_qubits),
            "sweep_p_sizes": list(self.sweep_p_sizes),
            "majority_repetitions": self.majority_repetitions,
            "sigma_samples": self.sigma_samples,
            "averages_cases": self.averages_cases,
            "tolerances": self.tolerances.to_json_obj(),
        }


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    max_deviation: float
    tolerance: float
    detail: str = ""

    def to_json_obj(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "max_deviation": self.max_deviation,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


def corpus_states(cfg: VerifyConfig) -> list[tuple[qstate.EntangledState, qstate.GoodSet]]:
    """Seeded corpus of random entangled states with random marked sets."""
    combos = [(nq, d) for nq in cfg.n_qubits_list for d in cfg.data_dims]
    out = []
    for i in range(cfg.corpus_count):
        nq, d = combos[i % len(combos)]
        n = 1 << nq
        rng = np.random.default_rng(cfg.base_seed + i)
        t = int(rng.integers(1, n))
        table = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
        state = qstate.from_amplitudes(table, renormalize=True)
        good = qstate.random_good_set(n, t, seed=cfg.base_seed + 100_000 + i)
        out.append((state, good))
    return out


def _max_row_dev(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)))


def check_closed_form_fidelity(cfg: VerifyConfig) -> CheckResult:
    """Predicted rows equal simulated rows, amplitude by amplitude, for n up to max_steps."""
    tol = cfg.tolerances.amplitude
    worst = 0.0
    for state, good in corpus_states(cfg):
        for n, sim in grover.grover_trajectory(state, good, cfg.max_steps):
            pred = analytic.closed_form_rows(state, good, n)
            worst = max(worst, _max_row_dev(pred.coeffs, sim.coeffs))
    return CheckResult("closed_form_fidelity", worst < tol, worst, tol)


def check_recurrence_consistency(cfg: VerifyConfig) -> CheckResult:
    """Rows rebuilt from the two-block recurrence equal the closed-form rows."""
    tol = cfg.tolerances.amplitude
    worst = 0.0
    for state, good in corpus_states(cfg):
        m = qstate.moments(state, good)
        gmask = good.mask(state.n_states)
        n_big = state.n_states
        for n in range(1, cfg.max_steps + 1):
            x, y = analytic.recurrence_vectors(m, n)
            rebuilt = np.empty_like(state.coeffs)
            rebuilt[gmask] = state.coeffs[gmask] - (2.0 / n_big) * x
            rebuilt[~gmask] = (-1) ** n * state.coeffs[~gmask] - (2.0 / n_big) * y
            pred = analytic.closed_form_rows(state, good, n)
            worst = max(worst, _max_row_dev(rebuilt, pred.coeffs))
    return CheckResult("recurrence_consistency", worst < tol, worst, tol)


def check_variance_conservation(cfg: VerifyConfig) -> CheckResult:
    """Sector variances of the iterated rows never drift from their initial values."""
    tol = cfg.tolerances.probability
    worst = 0.0
    for state, good in corpus_states(cfg):
        m0 = qstate.moments(state, good)
        for n, sim in grover.grover_trajectory(state, good, cfg.max_steps):
            mn = qstate.moments(sim, good)
            worst = max(worst, abs(mn.var_g - m0.var_g), abs(mn.var_b - m0.var_b))
    return CheckResult("variance_conservation", worst < tol, worst, tol)


def check_probability_law(cfg: VerifyConfig) -> CheckResult:
    """The damped-cosine law tracks simulation over two periods; the N-scaled
    coefficient variant must demonstrably fail on the uniform N=4 case."""
    tol = cfg.tolerances.probability
    worst = 0.0
    for state, good in corpus_states(cfg):
        m = qstate.moments(state, good)
        p = analytic.oscillation_params(m)
        n_max = math.ceil(math.pi / m.theta) + 1
        for n, sim in grover.grover_trajectory(state, good, n_max):
            worst = max(
                worst,
                abs(analytic.success_probability(p, n) - qstate.good_mass(sim, good)),
            )

    # negative control: coefficients scaled by N/2 and N overshoot immediately
    flat = qstate.new_flat(2, 1)
    good = qstate.GoodSet((0,))
    m = qstate.moments(flat, good)
    n_big = m.n_states
    cos2 = math.cos(m.theta) ** 2
    tan2 = math.tan(m.theta) ** 2
    dp_scaled = (n_big / 2.0) * cos2 * (m.b_norm2 + tan2 * m.g_norm2)
    pav_scaled = 1.0 - dp_scaled - n_big * m.var_b * cos2
    control_dev = 0.0
    for n, sim in grover.grover_trajectory(flat, good, 6):
        scaled = pav_scaled - dp_scaled * math.cos(2.0 * (2.0 * n * m.theta + m.theta))
        control_dev = max(control_dev, abs(scaled - qstate.good_mass(sim, good)))
    passed = worst < tol and control_dev > 0.5
    return CheckResult(
        "probability_law",
        passed,
        worst,
        tol,
        detail=f"N-scaled control deviates by {control_dev:.3f} (must exceed 0.5)",
    )


def check_grover_reduction(cfg: VerifyConfig) -> CheckResult:
    """Uniform states give P(n) = sin^2((2n+1) theta); N=4, t=1 peaks at n0 = 1."""
    tol = 1e-12
    worst = 0.0
    for nq, t in ((2, 1), (3, 1), (4, 3), (6, 1)):
        flat = qstate.new_flat(nq, 1)
        good = qstate.GoodSet(tuple(range(t)))
        m = qstate.moments(flat, good)
        p = analytic.oscillation_params(m)
        n_max = math.ceil(math.pi / m.theta) + 1
        for n, sim in grover.grover_trajectory(flat, good, n_max):
            expected = math.sin((2 * n + 1) * m.theta) ** 2
            worst = max(
                worst,
                abs(analytic.success_probability(p, n) - expected),
                abs(qstate.good_mass(sim, good) - expected),
            )
    flat = qstate.new_flat(2, 1)
    good = qstate.GoodSet((0,))
    p = analytic.oscillation_params(qstate.moments(flat, good))
    worst = max(worst, abs(analytic.success_probability(p, 1) - 1.0))
    worst = max(worst, abs(analytic.optimal_times(p, 0) - 1.0))
    return CheckResult("grover_reduction", worst < tol, worst, tol)


def check_degenerate_cases(cfg: VerifyConfig) -> CheckResult:
    """One-to-one data maps give constant P = t/N; the fine-tuned zero-mean
    construction gives P identically zero."""
    tol = cfg.tolerances.probability
    worst = 0.0
    for nq, t in ((2, 1), (3, 3)):
        n_big = 1 << nq
        state = qstate.from_amplitudes(np.eye(n_big, dtype=np.complex128))
        good = qstate.GoodSet(tuple(range(t)))
        p = analytic.oscillation_params(qstate.moments(state, good))
        if not p.degenerate:
            return CheckResult(
                "degenerate_cases", False, math.inf, tol, detail="one-to-one not flagged"
            )
        for n, sim in grover.grover_trajectory(state, good, 30):
            worst = max(worst, abs(qstate.good_mass(sim, good) - t / n_big))
            worst = max(worst, abs(analytic.success_probability(p, n) - t / n_big))

    # marked rows all zero, unmarked rows zero-mean: the iteration never
    # moves any mass onto the marked sector
    table = np.array([[0.0], [0.0], [math.sqrt(2.0)], [-math.sqrt(2.0)]], dtype=np.complex128)
    state = qstate.from_amplitudes(table)
    good = qstate.GoodSet((0, 1))
    p = analytic.oscillation_params(qstate.moments(state, good))
    worst = max(worst, abs(analytic.success_probability(p, 0) - 0.0))
    for n, sim in grover.grover_trajectory(state, good, 30):
        worst = max(worst, abs(qstate.good_mass(sim, good)))
    return CheckResult("degenerate_cases", worst < tol, worst, tol)


def _state_with_bad_variance(epsilon: float, seed: int) -> tuple[qstate.EntangledState, qstate.GoodSet]:
    """N=16, t=4 state with var_b*cos^2(theta) = epsilon and undamped oscillation."""
    nq, t = 4, 4
    n_big = 1 << nq
    sin2 = t / n_big
    cos2 = 1.0 - sin2
    var_g = 0.2
    b2 = 0.81
    var_b = epsilon / cos2
    g2 = (1.0 - epsilon - cos2 * b2 - sin2 * var_g) / sin2
    if g2 <= 0:
        raise ValueError("infeasible epsilon")
    good = qstate.GoodSet(tuple(range(t)))
    state = qstate.random_with_moments(
        nq, 1, good, var_g, var_b, [math.sqrt(g2)], [math.sqrt(b2)], seed=seed
    )
    return state, good


def check_p_max_claim(cfg: VerifyConfig) -> CheckResult:
    """With bad-sector variance epsilon (and no damping) the peak probability is 1 - epsilon."""
    tol = 1e-6
    worst = 0.0
    sim_dev = 0.0
    for i, eps in enumerate((0.01, 0.05, 0.1)):
        state, good = _state_with_bad_variance(eps, seed=cfg.base_seed + 777 + i)
        p = analytic.oscillation_params(qstate.moments(state, good))
        worst = max(worst, abs(analytic.p_max(p) - (1.0 - eps)))
        n_star = analytic.best_integer_time(p)
        sim = grover.grover_iterate(state, good, n_star)
        sim_dev = max(
            sim_dev,
            abs(qstate.good_mass(sim, good) - analytic.success_probability(p, n_star)),
        )
    passed = worst < tol and sim_dev < cfg.tolerances.probability
    return CheckResult(
        "p_max_claim",
        passed,
        worst,
        tol,
        detail=f"simulated P at best integer time within {sim_dev:.2e} of analytic",
    )


def check_counting_window(cfg: VerifyConfig) -> CheckResult:
    """Window formula equals circuit mass on the uniform N=16, t=4, P=16 case and
    exceeds 1/2; all three kernel sums stay in (8/pi^2, 1]."""
    tol = cfg.tolerances.probability
    flat = qstate.new_flat(4, 1)
    good = qstate.GoodSet((0, 1, 2, 3))
    pred = counting.window_probability(qstate.moments(flat, good), 16)
    dist = counting.ancilla_distribution(counting.build_count_state(flat, good, 16))
    circuit_mass = float(sum(dist[m] for m in pred.outcomes))
    worst = abs(pred.mass - circuit_mass)
    ok = (
        pred.outcomes == (2, 3, 13, 14)
        and pred.mass > 0.5
        and worst < tol
    )

    rng = np.random.default_rng(cfg.base_seed + 55)
    sigma_ok = True
    for _ in range(cfg.sigma_samples):
        p_size = int(rng.choice((8, 16, 32, 64)))
        f_int = rng.uniform(1.0, p_size / 2 - 1.0)
        f_low = rng.uniform(1e-6, 1.0 - 1e-6)
        f_high = rng.uniform(p_size / 2 - 1.0 + 1e-6, p_size / 2 - 1e-6)
        s1 = sum(
            counting.kernel_s(m, f_int, p_size, +1) ** 2
            for m in (
                math.floor(f_int),
                math.floor(f_int) + 1,
                p_size - math.floor(f_int) - 1,
                p_size - math.floor(f_int),
            )
        )
        s2 = sum(counting.kernel_s(m, f_low, p_size, +1) ** 2 for m in (0, 1, p_size - 1))
        s3 = sum(
            counting.kernel_s(m, f_high, p_size, +1) ** 2
            for m in (p_size // 2, p_size // 2 - 1, p_size // 2 + 1)
        )
        for s in (s1, s2, s3):
            if not SIGMA_LOW < s <= 1.0 + 1e-12:
                sigma_ok = False
    return CheckResult(
        "counting_window",
        ok and sigma_ok,
        worst,
        tol,
        detail=f"W1={pred.mass:.6f} on {pred.outcomes}; kernel-sum bounds "
        f"{'held' if sigma_ok else 'VIOLATED'} over {cfg.sigma_samples} samples/case",
    )


def _random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def check_sufficient_averages(cfg: VerifyConfig) -> CheckResult:
    """Sector averages both above pi^2/(8*sqrt(2)) guarantee window mass above 1/2."""
    rng = np.random.default_rng(cfg.base_seed + 99)
    min_w = 1.0
    for _ in range(cfg.averages_cases):
        nq = int(rng.choice((3, 4, 5)))
        n_big = 1 << nq
        d = int(rng.integers(1, 5))
        t = int(rng.integers(1, n_big - 1))
        p_size = int(rng.choice((8, 16, 32)))
        # both norms below 1 keep the variance budget positive for every t
        b2 = rng.uniform(AVG_THRESHOLD + 0.005, 0.95)
        g2 = rng.uniform(b2 + 1e-6, 0.99)
        sin2 = t / n_big
        cos2 = 1.0 - sin2
        budget = 1.0 - sin2 * g2 - cos2 * b2
        share = 0.0 if t == 1 else (1.0 if n_big - t == 1 else rng.uniform(0.0, 1.0))
        var_g = share * budget / sin2
        var_b = (1.0 - share) * budget / cos2
        good = qstate.random_good_set(n_big, t, seed=int(rng.integers(1 << 31)))
        state = qstate.random_with_moments(
            nq,
            d,
            good,
            var_g,
            var_b,
            math.sqrt(g2) * _random_unit(rng, d),
            math.sqrt(b2) * _random_unit(rng, d),
            seed=int(rng.integers(1 << 31)),
        )
        m = qstate.moments(state, good)
        if not (m.g_norm2 >= m.b_norm2 > AVG_THRESHOLD):
            return CheckResult(
                "sufficient_averages", False, math.inf, 0.5, detail="generator missed targets"
            )
        pred = counting.window_probability(m, p_size)
        min_w = min(min_w, pred.mass)
    return CheckResult(
        "sufficient_averages",
        min_w > 0.5,
        min_w,
        0.5,
        detail=f"minimum window mass over {cfg.averages_cases} cases",
    )


def check_estimator_bound(cfg: VerifyConfig) -> CheckResult:
    """Every window outcome decodes within the stated error bound; the majority
    of 101 samples lands in the window whenever its mass exceeds 1/2."""
    worst_slack = -math.inf
    majority_ok = True
    cell = 0
    for nq in cfg.sweep_n_qubits:
        n_big = 1 << nq
        flat = qstate.new_flat(nq, 1)
        for t in range(1, n_big // 4 + 1):
            good = qstate.GoodSet(tuple(range(t)))
            m = qstate.moments(flat, good)
            for p_size in cfg.sweep_p_sizes:
                cell += 1
                pred = counting.window_probability(m, p_size)
                bound = counting.error_bound(t, p_size, n_big)
                for outcome in pred.outcomes:
                    est = counting.estimate_from_outcome(outcome, p_size, n_big)
                    worst_slack = max(worst_slack, abs(est.t_tilde - t) - bound)
                report = counting.run_count(
                    flat,
                    good,
                    p_size,
                    repetitions=cfg.majority_repetitions,
                    seed=cfg.base_seed + cell,
                )
                if pred.mass > 0.5 and (
                    report.majority_m not in pred.outcomes or report.w_empirical <= 0.5
                ):
                    majority_ok = False
    return CheckResult(
        "estimator_bound",
        worst_slack <= 0.0 and majority_ok,
        worst_slack,
        0.0,
        detail=f"max (|t~-t| - bound) over {cell} cells; majority rule "
        f"{'held' if majority_ok else 'FAILED'}",
    )


def results_to_json_obj(results: list[CheckResult]) -> list[dict]:
    return [r.to_json_obj() for r in results]


def check_determinism(cfg: VerifyConfig) -> CheckResult:
    """Reduced battery rerun with worker counts 1 and 4 serializes identically."""
    small = replace(
        cfg,
        corpus_count=8,
        max_steps=10,
        sweep_n_qubits=(4,),
        sweep_p_sizes=(16,),
        sigma_samples=50,
        averages_cases=8,
    )
    blobs = []
    for workers in (1, 4, 1):
        results = run_checks(small, workers=workers, include_determinism=False)
        blobs.append(json.dumps(results_to_json_obj(results), sort_keys=True))
    passed = blobs[0] == blobs[1] == blobs[2]
    return CheckResult(
        "determinism",
        passed,
        0.0 if passed else math.inf,
        0.0,
        detail="reduced battery, 3 runs, workers {1, 4}",
    )


CHECKS = (
    check_closed_form_fidelity,
    check_recurrence_consistency,
    check_variance_conservation,
    check_probability_law,
    check_grover_reduction,
    check_degenerate_cases,
    check_p_max_claim,
    check_counting_window,
    check_sufficient_averages,
    check_estimator_bound,
)


def run_checks(
    cfg: VerifyConfig, workers: int = 1, include_determinism: bool = True
) -> list[CheckResult]:
    """Run the battery; results come back in declaration order regardless of workers."""
    fns = list(CHECKS)
    if workers <= 1:
        results = [fn(cfg) for fn in fns]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda fn: fn(cfg), fns))
    if include_determinism:
        results.append(check_determinism(cfg))
    return results
