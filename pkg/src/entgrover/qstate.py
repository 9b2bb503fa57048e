"""Entangled register states and their moment statistics.

A state couples an n-qubit search register (N = 2**n_qubits basis indices)
to a D-dimensional data register.  It is stored as an N x D complex table
whose row ``a`` is the un-normalized data vector attached to search index
``a``; the physical state is the table scaled by 1/sqrt(N), so the
normalization convention is

    sum_a ||f_a||^2 = N.

All probabilities downstream therefore carry an explicit 1/N.  Rows need
not be unit vectors, orthogonal, or distinct: the mapping from search
index to data vector is arbitrary.

States are immutable; every operation returns a fresh value.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

NORM_ATOL = 1e-9

_MEMORY_CAP_ENV = "ENTGROVER_MEMORY_CAP"
_DEFAULT_MEMORY_CAP = 1 << 30  # bytes of complex amplitude storage


class MemoryLimitError(RuntimeError):
    """Requested amplitude table exceeds the configured memory cap."""


def memory_cap_bytes() -> int:
    """Current amplitude-storage cap in bytes (env ENTGROVER_MEMORY_CAP overrides)."""
    raw = os.environ.get(_MEMORY_CAP_ENV)
    if raw is None:
        return _DEFAULT_MEMORY_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"{_MEMORY_CAP_ENV} must be an integer byte count, got {raw!r}") from exc
    if cap <= 0:
        raise ValueError(f"{_MEMORY_CAP_ENV} must be positive, got {cap}")
    return cap


def check_memory(n_amplitudes: int) -> None:
    needed = n_amplitudes * 16  # complex128
    cap = memory_cap_bytes()
    if needed > cap:
        raise MemoryLimitError(
            f"state of {n_amplitudes} amplitudes needs {needed} bytes, cap is {cap}"
        )


def _norm_sq_total(coeffs: np.ndarray) -> float:
    """Exactly-rounded sum of squared magnitudes (fsum keeps the 1e-9 gate honest)."""
    mag2 = np.square(coeffs.real) + np.square(coeffs.imag)
    return math.fsum(mag2.ravel().tolist())


@dataclass(frozen=True)
class EntangledState:
    """Immutable N x D coefficient table under the sum ||f_a||^2 = N convention."""

    n_qubits: int
    data_dim: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if self.data_dim < 1:
            raise ValueError(f"data_dim must be >= 1, got {self.data_dim}")
        n = 1 << self.n_qubits
        check_memory(n * self.data_dim)
        c = np.array(self.coeffs, dtype=np.complex128, copy=True)
        if c.shape != (n, self.data_dim):
            raise ValueError(f"coefficient table must be {n}x{self.data_dim}, got {c.shape}")
        total = _norm_sq_total(c)
        if abs(total - n) > NORM_ATOL:
            raise ValueError(
                f"total squared norm must equal N={n} within {NORM_ATOL}, got {total!r}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_states(self) -> int:
        return 1 << self.n_qubits

    def physical_norm(self) -> float:
        """Norm of the physical (1/sqrt(N)-scaled) state; 1.0 for any valid state."""
        return math.sqrt(_norm_sq_total(self.coeffs) / self.n_states)

    def to_json_obj(self) -> dict:
        """Schema: {"n_qubits": int, "data_dim": int, "rows": [[[re, im], ...], ...]}."""
        rows = [[[z.real, z.imag] for z in row] for row in self.coeffs]
        return {"n_qubits": self.n_qubits, "data_dim": self.data_dim, "rows": rows}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "EntangledState":
        try:
            n_qubits = int(obj["n_qubits"])
            data_dim = int(obj["data_dim"])
            rows = obj["rows"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"state object missing required field: {exc}") from exc
        coeffs = np.array(
            [[complex(re, im) for re, im in row] for row in rows], dtype=np.complex128
        )
        if coeffs.ndim != 2:
            raise ValueError("state rows must form a rectangular table")
        return cls(n_qubits=n_qubits, data_dim=data_dim, coeffs=coeffs)


@dataclass(frozen=True)
class GoodSet:
    """The marked search indices, kept strictly increasing."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        if any(i < 0 for i in idx):
            raise ValueError("marked indices must be non-negative")
        if len(set(idx)) != len(idx):
            raise ValueError("marked indices must be unique")
        object.__setattr__(self, "indices", tuple(sorted(idx)))

    @property
    def t(self) -> int:
        return len(self.indices)

    def mask(self, n_states: int) -> np.ndarray:
        if self.indices and self.indices[-1] >= n_states:
            raise ValueError(
                f"marked index {self.indices[-1]} out of range for N={n_states}"
            )
        m = np.zeros(n_states, dtype=bool)
        if self.indices:
            m[list(self.indices)] = True
        return m


def random_good_set(n_states: int, t: int, seed: int) -> GoodSet:
    if not 0 <= t <= n_states:
        raise ValueError(f"need 0 <= t <= N, got t={t}, N={n_states}")
    rng = np.random.default_rng(seed)
    picks = rng.choice(n_states, size=t, replace=False)
    return GoodSet(tuple(int(i) for i in picks))


@dataclass(frozen=True)
class MomentSummary:
    """Sector averages and variances of the data-vector distribution.

    The good/bad averages are None for the degenerate sectors t=0 / t=N.
    theta is the rotation angle with sin^2(theta) = t/N.
    """

    n_states: int
    t: int
    g_avg: np.ndarray | None
    b_avg: np.ndarray | None
    g_norm2: float
    b_norm2: float
    cross: complex
    var_g: float
    var_b: float
    theta: float
    n_good_mass: float

    def __post_init__(self) -> None:
        for name in ("g_avg", "b_avg"):
            v = getattr(self, name)
            if v is not None:
                v = np.array(v, dtype=np.complex128, copy=True)
                v.setflags(write=False)
                object.__setattr__(self, name, v)
        if self.var_g < 0 or self.var_b < 0:
            raise ValueError("sector variances cannot be negative")


def _sector_stats(rows: np.ndarray) -> tuple[np.ndarray, float, float]:
    avg = rows.mean(axis=0)
    dev = rows - avg
    var = float(np.sum(np.square(dev.real) + np.square(dev.imag))) / rows.shape[0]
    norm2 = float(np.vdot(avg, avg).real)
    return avg, norm2, var


def moments(state: EntangledState, good: GoodSet) -> MomentSummary:
    """Sector means, variances and the rotation angle of a marked-set split.

    For t=0 (t=N) the good (bad) sector is empty: its average is None, its
    variance and norm are zero, and theta is 0 (pi/2).
    """
    n = state.n_states
    gmask = good.mask(n)
    t = good.t
    c = state.coeffs
    g_avg = b_avg = None
    g_norm2 = b_norm2 = var_g = var_b = 0.0
    if t > 0:
        g_avg, g_norm2, var_g = _sector_stats(c[gmask])
    if t < n:
        b_avg, b_norm2, var_b = _sector_stats(c[~gmask])
    cross = complex(np.vdot(g_avg, b_avg)) if t > 0 and t < n else 0j
    n_good_mass = float(np.sum(np.square(c[gmask].real) + np.square(c[gmask].imag)))
    return MomentSummary(
        n_states=n,
        t=t,
        g_avg=g_avg,
        b_avg=b_avg,
        g_norm2=g_norm2,
        b_norm2=b_norm2,
        cross=cross,
        var_g=var_g,
        var_b=var_b,
        theta=math.asin(math.sqrt(t / n)),
        n_good_mass=n_good_mass,
    )


def new_flat(n_qubits: int, data_dim: int) -> EntangledState:
    """Uniform state: every row is the first data basis vector."""
    if n_qubits < 1 or data_dim < 1:
        raise ValueError("n_qubits and data_dim must be >= 1")
    n = 1 << n_qubits
    check_memory(n * data_dim)
    c = np.zeros((n, data_dim), dtype=np.complex128)
    c[:, 0] = 1.0
    return EntangledState(n_qubits=n_qubits, data_dim=data_dim, coeffs=c)


def from_amplitudes(coeffs: Sequence | np.ndarray, renormalize: bool = False) -> EntangledState:
    """Build a state from an explicit N x D table.

    With renormalize off the table must already satisfy sum ||f_a||^2 = N
    to within 1e-9; with it on, a single global factor rescales the table.
    """
    c = np.array(coeffs, dtype=np.complex128)
    if c.ndim == 1:
        c = c[:, None]
    if c.ndim != 2:
        raise ValueError(f"coefficient table must be 2-D, got shape {c.shape}")
    n, d = c.shape
    if n < 2 or (n & (n - 1)) != 0:
        raise ValueError(f"row count must be a power of two >= 2, got {n}")
    n_qubits = n.bit_length() - 1
    if renormalize:
        total = _norm_sq_total(c)
        if total <= 0.0:
            raise ValueError("cannot renormalize a zero table")
        c = c * math.sqrt(n / total)
    return EntangledState(n_qubits=n_qubits, data_dim=d, coeffs=c)


def _zero_sum_perturbations(
    rng: np.random.Generator, count: int, dim: int, target_var: float
) -> np.ndarray:
    """Rows summing to zero whose sample variance equals target_var exactly."""
    if target_var < 0:
        raise ValueError("variance targets must be >= 0")
    if target_var == 0.0:
        return np.zeros((count, dim), dtype=np.complex128)
    if count < 2:
        raise ValueError("a single-row sector has zero sample variance; target must be 0")
    d = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    d -= d.mean(axis=0)
    s2 = float(np.sum(np.square(d.real) + np.square(d.imag))) / count
    if s2 <= 0.0:
        raise ValueError("degenerate perturbation draw")
    return d * math.sqrt(target_var / s2)


def random_with_moments(
    n_qubits: int,
    data_dim: int,
    good: GoodSet,
    target_var_g: float,
    target_var_b: float,
    g_avg: Sequence | np.ndarray,
    b_avg: Sequence | np.ndarray,
    seed: int,
) -> EntangledState:
    """Pseudo-random state with prescribed sector averages and variances.

    Rows are mean + zero-sum perturbation, with perturbations scaled so the
    sample variances hit the targets exactly; one global rescale then
    enforces sum ||f_a||^2 = N.  The rescale multiplies averages by c and
    variances by c^2, so ratios var/||avg||^2 are preserved; targets that
    already satisfy

        sin^2(theta) * (var_g + ||g_avg||^2) + cos^2(theta) * (var_b + ||b_avg||^2) = 1

    are reproduced verbatim.  Deterministic in the seed.
    """
    if n_qubits < 1 or data_dim < 1:
        raise ValueError("n_qubits and data_dim must be >= 1")
    if target_var_g < 0 or target_var_b < 0:
        raise ValueError("variance targets must be >= 0")
    n = 1 << n_qubits
    t = good.t
    good.mask(n)  # range check
    ga = np.asarray(g_avg, dtype=np.complex128).reshape(data_dim)
    ba = np.asarray(b_avg, dtype=np.complex128).reshape(data_dim)
    if t == 1 and target_var_g > 0:
        raise ValueError("t=1 forces var_g=0; nonzero target is unsatisfiable")
    if n - t == 1 and target_var_b > 0:
        raise ValueError("a single bad row forces var_b=0; nonzero target is unsatisfiable")

    sin2 = t / n
    cos2 = 1.0 - sin2
    total = sin2 * (target_var_g + float(np.vdot(ga, ga).real)) + cos2 * (
        target_var_b + float(np.vdot(ba, ba).real)
    )
    if total <= 0.0:
        raise ValueError("targets produce a zero state; total norm must be positive")
    scale = 1.0 / math.sqrt(total)

    rng = np.random.default_rng(seed)
    c = np.zeros((n, data_dim), dtype=np.complex128)
    gmask = good.mask(n)
    if t > 0:
        c[gmask] = scale * (ga + _zero_sum_perturbations(rng, t, data_dim, target_var_g))
    if t < n:
        c[~gmask] = scale * (ba + _zero_sum_perturbations(rng, n - t, data_dim, target_var_b))
    return EntangledState(n_qubits=n_qubits, data_dim=data_dim, coeffs=c)


def search_distribution(state: EntangledState) -> np.ndarray:
    """Probability of measuring each search index: ||f_a||^2 / N."""
    c = state.coeffs
    return (np.sum(np.square(c.real) + np.square(c.imag), axis=1) / state.n_states).astype(
        np.float64
    )


def good_mass(state: EntangledState, good: GoodSet) -> float:
    """Probability of measuring a marked index."""
    gmask = good.mask(state.n_states)
    c = state.coeffs[gmask]
    return float(np.sum(np.square(c.real) + np.square(c.imag))) / state.n_states
