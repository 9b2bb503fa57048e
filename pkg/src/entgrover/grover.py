"""Exact application of the search-register operators to an entangled state.

The iteration operator is the composition  -W S0 W S_H : the marked-row
phase flip S_H, the Walsh-Hadamard transform W on the search register,
the |0> reflection S0, W again, and a global sign.  The global sign is
kept (not dropped as an unobservable phase) so iterated rows can be
compared amplitude-by-amplitude, including the (-1)^n alternation of the
unmarked rows, against closed-form predictions.

Everything here acts on the search index only; the data register rides
along untouched.  All functions are pure and numerically exact up to
double rounding (the Hadamard passes are in-place butterflies, no N x N
matrix is ever materialized).
"""
from __future__ import annotations

import math

import numpy as np

from .qstate import EntangledState, GoodSet

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def _hadamard_rows(table: np.ndarray) -> np.ndarray:
    """n-qubit Hadamard along axis 0 via log2(N) butterfly passes."""
    n = table.shape[0]
    out = np.array(table, dtype=np.complex128, copy=True)
    h = 1
    while h < n:
        out = out.reshape(n // (2 * h), 2, h, -1)
        top = out[:, 0].copy()
        bot = out[:, 1].copy()
        out[:, 0] = (top + bot) * _INV_SQRT2
        out[:, 1] = (top - bot) * _INV_SQRT2
        out = out.reshape(n, -1)
        h *= 2
    return out.reshape(table.shape)


def _flip_good(table: np.ndarray, gmask: np.ndarray) -> np.ndarray:
    out = table.copy()
    out[gmask] = -out[gmask]
    return out


def _step_rows(table: np.ndarray, gmask: np.ndarray) -> np.ndarray:
    out = _flip_good(table, gmask)
    out = _hadamard_rows(out)
    out[0] = -out[0]
    out = _hadamard_rows(out)
    return -out


def _wrap(state: EntangledState, coeffs: np.ndarray) -> EntangledState:
    return EntangledState(n_qubits=state.n_qubits, data_dim=state.data_dim, coeffs=coeffs)


def oracle_phase_flip(state: EntangledState, good: GoodSet) -> EntangledState:
    """Negate the marked rows (the reflection I - 2 sum_g |g><g|)."""
    gmask = good.mask(state.n_states)
    return _wrap(state, _flip_good(state.coeffs, gmask))


def walsh_hadamard(state: EntangledState) -> EntangledState:
    """Apply H on every search qubit; the data register is untouched."""
    return _wrap(state, _hadamard_rows(state.coeffs))


def reflect_zero(state: EntangledState) -> EntangledState:
    """Negate row 0 (the reflection I - 2|0><0|)."""
    c = state.coeffs.copy()
    c[0] = -c[0]
    return _wrap(state, c)


def grover_step(state: EntangledState, good: GoodSet) -> EntangledState:
    """One amplification step: -W S0 W S_H, global sign included."""
    gmask = good.mask(state.n_states)
    return _wrap(state, _step_rows(state.coeffs, gmask))


def grover_iterate(state: EntangledState, good: GoodSet, n: int) -> EntangledState:
    """n amplification steps; n=0 returns the input state unchanged."""
    if n < 0:
        raise ValueError(f"iteration count must be >= 0, got {n}")
    if n == 0:
        return state
    gmask = good.mask(state.n_states)
    c = state.coeffs
    for _ in range(n):
        c = _step_rows(c, gmask)
    return _wrap(state, c)


def grover_trajectory(state: EntangledState, good: GoodSet, n_max: int):
    """Yield (n, state after n steps) for n = 0 .. n_max, reusing each step."""
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    gmask = good.mask(state.n_states)
    yield 0, state
    c = state.coeffs
    for n in range(1, n_max + 1):
        c = _step_rows(c, gmask)
        yield n, _wrap(state, c)
