"""Unitary circuit elements and ideal photon detection.

Phase shifts and cross-Kerr couplings are exact diagonal phase
multiplications. The 50:50 beam splitter mixes two equal-cutoff modes; it
conserves the pair's total photon number, so its matrix is assembled
block-by-block from the exponentiated hopping generator (spectral
decomposition of the tridiagonal block). The phase convention is pinned so
that a single photon entering either port leaves as an equal superposition
with an ``i`` on the crossed port:

    |1>|0| -> (|1>|0> + i |0>|1>) / sqrt(2)
    |0>|1| -> (|0>|1> + i |1>|0>) / sqrt(2)

Blocks whose total photon number exceeds the per-mode cutoff cannot be
represented completely; the element then applies the physical unitary
restricted to the representable states, losing the truncated amplitudes,
and emits a :class:`TruncationWarning` if the input actually populates
such a block.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import ModeLabelError, StateMismatchError, TruncationWarning
from .fock import MultiModeState, project_mode

# Half-angle of the exponentiated hopping generator. pi/4 realizes the 50:50
# convention above; tests may override it to verify the convention is load-
# bearing (the cache is keyed on it).
_BS_HALF_ANGLE = math.pi / 4

# Input probability mass on over-cutoff blocks above which the beam splitter
# warns about truncation loss.
_BOUNDARY_MASS_THRESHOLD = 1e-15


@dataclass(frozen=True)
class BalancedBeamSplitter:
    """50:50 beam splitter between two modes of equal cutoff."""

    mode_1: str
    mode_2: str

    def __post_init__(self):
        _require_distinct(self.mode_1, self.mode_2)


@dataclass(frozen=True)
class PhaseShift:
    """Multiplies the n-photon amplitude of ``mode`` by exp(i*n*theta)."""

    mode: str
    theta: float

    def __post_init__(self):
        _require_finite_angle(self.theta, "theta")


@dataclass(frozen=True)
class CrossKerr:
    """Multiplies the (n1, n2) amplitude by exp(-i*n1*n2*tau).

    ``tau`` is the accumulated nonlinear phase; the medium's coupling
    strength, length, and light speed enter only through this product.
    """

    mode_1: str
    mode_2: str
    tau: float

    def __post_init__(self):
        _require_distinct(self.mode_1, self.mode_2)
        _require_finite_angle(self.tau, "tau")


@dataclass(frozen=True)
class Detect:
    """Ideal photon-number detection of ``n`` photons on ``mode``."""

    mode: str
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"detected photon count must be >= 0, got {self.n}")


Element = Union[BalancedBeamSplitter, PhaseShift, CrossKerr, Detect]


def _require_distinct(m1: str, m2: str) -> None:
    if m1 == m2:
        raise ModeLabelError(f"element needs two distinct modes, got {m1!r} twice")


def _require_finite_angle(value: float, name: str) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


def apply_phase_shift(state: MultiModeState, mode: str, theta: float) -> MultiModeState:
    _require_finite_angle(theta, "theta")
    ax = state.axis(mode)
    dim = state.tensor.shape[ax]
    phases = np.exp(1j * theta * np.arange(dim))
    shape = [1] * state.tensor.ndim
    shape[ax] = dim
    return state.with_tensor(state.tensor * phases.reshape(shape))


def apply_cross_kerr(
    state: MultiModeState, mode_1: str, mode_2: str, tau: float
) -> MultiModeState:
    _require_distinct(mode_1, mode_2)
    _require_finite_angle(tau, "tau")
    ax1 = state.axis(mode_1)
    ax2 = state.axis(mode_2)
    d1 = state.tensor.shape[ax1]
    d2 = state.tensor.shape[ax2]
    phases = np.exp(-1j * tau * np.outer(np.arange(d1), np.arange(d2)))
    shape = [1] * state.tensor.ndim
    shape[ax1] = d1
    shape[ax2] = d2
    # outer() above is laid out (mode_1, mode_2); transpose if the axes are
    # ordered the other way round in the tensor.
    if ax1 > ax2:
        phases = phases.T
    return state.with_tensor(state.tensor * phases.reshape(shape))


@lru_cache(maxsize=None)
def _beam_splitter_matrix(cutoff: int, half_angle: float) -> np.ndarray:
    """Two-mode matrix with shape (d, d, d, d), d = cutoff + 1.

    Indexed [out_1, out_2, in_1, in_2]. Assembled per total-photon block N;
    the hopping generator within a block is tridiagonal with entries
    sqrt((m+1)(N-m)), and the block unitary is its spectral exponential at
    the given half-angle. Over-cutoff blocks are filled with the physical
    unitary restricted to representable photon splits.
    """
    d = cutoff + 1
    out = np.zeros((d, d, d, d), dtype=np.complex128)
    for total in range(2 * cutoff + 1):
        gen = np.zeros((total + 1, total + 1))
        for m in range(total):
            gen[m + 1, m] = math.sqrt((m + 1) * (total - m))
            gen[m, m + 1] = gen[m + 1, m]
        evals, evecs = np.linalg.eigh(gen)
        block = (evecs * np.exp(1j * half_angle * evals)) @ evecs.T.conj()
        lo, hi = max(0, total - cutoff), min(total, cutoff)
        for mi in range(lo, hi + 1):
            for mj in range(lo, hi + 1):
                out[mi, total - mi, mj, total - mj] = block[mi, mj]
    out.setflags(write=False)
    return out


def apply_beam_splitter(state: MultiModeState, mode_1: str, mode_2: str) -> MultiModeState:
    _require_distinct(mode_1, mode_2)
    ax1 = state.axis(mode_1)
    ax2 = state.axis(mode_2)
    d1 = state.tensor.shape[ax1]
    d2 = state.tensor.shape[ax2]
    if d1 != d2:
        raise StateMismatchError(
            f"beam splitter needs equal cutoffs, got {d1 - 1} ({mode_1!r}) vs {d2 - 1} ({mode_2!r})"
        )
    cutoff = d1 - 1

    boundary = _over_cutoff_mass(state, ax1, ax2, cutoff)
    if boundary > _BOUNDARY_MASS_THRESHOLD:
        warnings.warn(
            f"beam splitter on modes ({mode_1!r}, {mode_2!r}): probability "
            f"{boundary:.3e} sits on pair photon numbers above the cutoff "
            f"{cutoff}; that mass is partly truncated",
            TruncationWarning,
            stacklevel=2,
        )

    matrix = _beam_splitter_matrix(cutoff, _BS_HALF_ANGLE)
    moved = np.moveaxis(state.tensor, (ax1, ax2), (0, 1))
    mixed = np.tensordot(matrix, moved, axes=([2, 3], [0, 1]))
    return state.with_tensor(np.moveaxis(mixed, (0, 1), (ax1, ax2)))


def _over_cutoff_mass(state: MultiModeState, ax1: int, ax2: int, cutoff: int) -> float:
    probs = np.abs(np.moveaxis(state.tensor, (ax1, ax2), (0, 1))) ** 2
    pair = probs.reshape(probs.shape[0], probs.shape[1], -1).sum(axis=2)
    n1, n2 = np.indices(pair.shape)
    return float(pair[n1 + n2 > cutoff].sum())


def apply_element(state: MultiModeState, element: Element):
    """Dispatch one element; Detect returns ``(remaining_state, probability)``."""
    match element:
        case BalancedBeamSplitter(mode_1=m1, mode_2=m2):
            return apply_beam_splitter(state, m1, m2)
        case PhaseShift(mode=m, theta=theta):
            return apply_phase_shift(state, m, theta)
        case CrossKerr(mode_1=m1, mode_2=m2, tau=tau):
            return apply_cross_kerr(state, m1, m2, tau)
        case Detect(mode=m, n=n):
            return project_mode(state, m, n)
    raise TypeError(f"not a circuit element: {element!r}")
