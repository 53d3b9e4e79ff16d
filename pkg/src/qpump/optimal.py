"""Optimality diagnostics.

A pump is optimal exactly when its energy shift is diagonal at all
times; equivalently the dissipation bound is saturated in every channel,
and equivalently the scattering matrix factors as a time-dependent
diagonal unitary times a constant one.  This module measures all three.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .matcore import DEFAULT_TOLERANCES, CycleGrid, Tolerances, UnitaryMatrix
from .models import PumpModel
from .shift import EnergyShift, energy_shift_cycle, sample_cycle
from .transport import bound_residual, dissipation

__all__ = [
    "offdiag_ratio",
    "DiagonalDecomposition",
    "OptimalityVerdict",
    "optimality_verdict",
    "diagonal_decomposition",
]

#: Energy shifts with Frobenius norm below this are treated as motionless.
MOTIONLESS_NORM = 1e-14


def offdiag_ratio(e: EnergyShift) -> float:
    """Relative off-diagonal weight ``||offdiag(E)||_F / ||E||_F``.

    Scale free, so slow and fast cycles are judged alike.  A motionless
    pump (vanishing energy shift) is vacuously optimal: ratio 0.
    """
    m = e.array
    total = float(np.linalg.norm(m))
    if total < MOTIONLESS_NORM:
        return 0.0
    off = m - np.diag(np.diag(m))
    return float(np.linalg.norm(off)) / total


@dataclass(frozen=True, eq=False)
class DiagonalDecomposition:
    """Factorization ``S(t_i) = diag(exp(i phases[i])) @ constant``.

    ``phases`` has shape (N, n) and is unwrapped along the cycle;
    ``constant`` is the scattering matrix at the first grid node.
    """

    phases: np.ndarray
    constant: UnitaryMatrix


@dataclass(frozen=True, eq=False)
class OptimalityVerdict:
    """Outcome of the cycle-wide optimality sweep.

    ``is_optimal`` is equivalent to ``max_offdiag_ratio < tol_opt``;
    ``worst_time`` is where the ratio peaks.  ``per_channel_saturation``
    flags channels whose dissipation-bound residual stays at rounding
    level relative to their dissipation scale.  ``decomposition`` is
    attempted (and expected to succeed) exactly when the verdict is
    optimal.
    """

    is_optimal: bool
    max_offdiag_ratio: float
    worst_time: float
    per_channel_saturation: tuple[bool, ...]
    decomposition: DiagonalDecomposition | None


def _saturation_flags(shifts: Sequence[EnergyShift], tol: Tolerances) -> tuple[bool, ...]:
    residuals = np.stack([bound_residual(e) for e in shifts])
    totals = np.stack([dissipation(e).total for e in shifts])
    worst = residuals.max(axis=0)
    scale = totals.max(axis=0)
    # tol_opt bounds the off-diagonal *ratio*; residuals scale with its
    # square.  The eps floor absorbs rounding in the subtraction.
    threshold = max(DEFAULT_TOLERANCES.tol_opt**2, 64.0 * np.finfo(float).eps) * scale
    threshold = np.maximum(threshold, tol.tol_opt**2 * scale)
    return tuple(bool(w <= th) for w, th in zip(worst, threshold))


def optimality_verdict(model: PumpModel, mu: float, grid: CycleGrid,
                       tolerances: Tolerances | None = None,
                       shifts: Sequence[EnergyShift] | None = None) -> OptimalityVerdict:
    """Sweep the cycle and judge optimality.

    Precomputed ``shifts`` may be passed to avoid resampling; they must
    come from the same (model, mu, grid).
    """
    tol = tolerances or DEFAULT_TOLERANCES
    if shifts is None:
        shifts = energy_shift_cycle(model, mu, grid, tol)
    ratios = np.array([offdiag_ratio(e) for e in shifts])
    worst_index = int(np.argmax(ratios))
    max_ratio = float(ratios[worst_index])
    is_optimal = max_ratio < tol.tol_opt
    decomposition = None
    if is_optimal:
        decomposition = diagonal_decomposition(model, mu, grid)
    return OptimalityVerdict(
        is_optimal=is_optimal,
        max_offdiag_ratio=max_ratio,
        worst_time=float(shifts[worst_index].t),
        per_channel_saturation=_saturation_flags(shifts, tol),
        decomposition=decomposition,
    )


def diagonal_decomposition(model: PumpModel, mu: float, grid: CycleGrid,
                           offdiag_tol: float = 1e-8,
                           recon_tol: float = 1e-8) -> DiagonalDecomposition | None:
    """Try to factor the cycle as ``S(t) = U_d(t) S0``.

    Anchors ``S0 = S(t_0)`` (any fixed gauge works; the first node is
    canonical) and forms ``M(t_i) = S(t_i) S0^dag``.  The factorization
    exists when every M is diagonal: then ``U_d = diag(M)`` up to
    rounding.  Absence is a value, not an error -- ``None`` is returned
    when any off-diagonal entry of M reaches ``offdiag_tol`` or the
    reconstruction error reaches ``recon_tol``.
    """
    s = sample_cycle(model, mu, grid)
    s0 = s[0]
    m = np.einsum("tij,kj->tik", s, s0.conj())
    off = m - m * np.eye(model.n_channels)[None, :, :]
    if float(np.max(np.abs(off))) >= offdiag_tol:
        return None
    phases = np.unwrap(np.angle(np.einsum("tjj->tj", m)), axis=0)
    rebuilt = np.exp(1j * phases)[:, :, None] * s0[None, :, :]
    recon_error = float(np.max(np.linalg.norm(rebuilt - s, axis=(1, 2))))
    if recon_error >= recon_tol:
        return None
    return DiagonalDecomposition(phases=phases, constant=UnitaryMatrix(s0))
