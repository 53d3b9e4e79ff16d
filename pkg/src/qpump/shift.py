"""Energy-shift and time-delay matrices of a pump cycle.

The energy shift is the Hermitian matrix ``i dS/dt S^dag`` (hbar = 1)
evaluated on the cycle grid with spectral time differentiation; its dual
under t <-> E exchange is the Wigner time delay ``-i dS/dE S^dag``,
computed by fourth-order central differences because the energy
dependence is not periodic.  Diagonal entries of the energy shift drive
the channel currents; off-diagonal entries drive excess dissipation,
entropy and noise (see :mod:`qpump.transport`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EnergyOutOfWindow, GridMismatch, NumericalFailure
from .matcore import (
    DEFAULT_TOLERANCES,
    CycleGrid,
    HermitianMatrix,
    Tolerances,
    central_derivative,
    spectral_derivative,
)
from .models import PumpModel

__all__ = [
    "EnergyShift",
    "TimeDelay",
    "VelocitySplit",
    "HARD_HERM_LIMIT",
    "ENERGY_STEP_FRACTION",
    "sample_cycle",
    "energy_shift_cycle",
    "energy_shift_at",
    "energy_shift_fd",
    "energy_shift_rows",
    "time_delay",
    "delay_scale",
    "adiabaticity",
    "velocity_split",
]

#: Relative non-Hermiticity beyond which the grid is considered under-resolved.
HARD_HERM_LIMIT = 1e-3

#: Default energy-derivative step as a fraction of the energy window width.
ENERGY_STEP_FRACTION = 1e-4


@dataclass(frozen=True, eq=False)
class EnergyShift:
    """Energy shift at one cycle time (units of energy, hbar = 1).

    ``matrix`` is stored exactly Hermitian; ``herm_defect`` is the
    relative anti-Hermitian residue of the raw product before
    symmetrization, kept for diagnostics.  ``warning`` is set when the
    defect exceeds the configured warning tolerance.
    """

    matrix: HermitianMatrix
    t: float
    mu: float
    herm_defect: float
    warning: str | None = None

    @property
    def array(self) -> np.ndarray:
        return self.matrix.array

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @classmethod
    def from_matrix(cls, array, t: float = 0.0, mu: float = 0.0) -> "EnergyShift":
        """Wrap an explicit (near-)Hermitian matrix, e.g. for tests."""
        herm = HermitianMatrix(array)
        return cls(herm, float(t), float(mu), herm.hermiticity_defect)


@dataclass(frozen=True, eq=False)
class TimeDelay:
    """Wigner time delay at one cycle time (units of time)."""

    matrix: HermitianMatrix
    t: float
    mu: float

    @property
    def array(self) -> np.ndarray:
        return self.matrix.array


@dataclass(frozen=True, eq=False)
class VelocitySplit:
    """Per-channel squared row velocity, split into phase motion along the
    fiber (|diag|^2) and projective motion in the base (off-diagonal
    weight).  ``fiber + base`` equals the diagonal of the squared energy
    shift."""

    fiber: np.ndarray
    base: np.ndarray


def sample_cycle(model: PumpModel, mu: float, grid: CycleGrid) -> np.ndarray:
    """Sample S(t, mu) on the grid; every sample is certified unitary.

    Returns an (N, n, n) complex array.
    """
    if abs(grid.period - model.period) > 1e-12 * max(1.0, abs(model.period)):
        raise GridMismatch(
            f"grid period {grid.period!r} differs from model period {model.period!r}"
        )
    return np.stack([model.eval(t, mu).array for t in grid.times])


def _shift_at_node(s, ds, index, t, mu, tolerances) -> EnergyShift:
    raw = 1j * (ds[index] @ s[index].conj().T)
    herm = HermitianMatrix(raw)
    defect = herm.hermiticity_defect
    if defect > HARD_HERM_LIMIT:
        raise NumericalFailure(
            f"hermiticity defect {defect:.3e} at t={t:.6g} exceeds {HARD_HERM_LIMIT:g}; "
            "the grid does not resolve the cycle"
        )
    warning = None
    if defect >= tolerances.tol_herm:
        warning = (
            f"hermiticity defect {defect:.3e} at t={t:.6g} exceeds "
            f"{tolerances.tol_herm:g}"
        )
    return EnergyShift(herm, float(t), float(mu), defect, warning)


def energy_shift_cycle(model: PumpModel, mu: float, grid: CycleGrid,
                       tolerances: Tolerances | None = None) -> list[EnergyShift]:
    """Energy shift ``i dS/dt S^dag`` at every grid time.

    The sampled matrices are differentiated entrywise by FFT and
    multiplied by S^dag node by node, then symmetrized.  Raises
    :class:`NumericalFailure` when any pre-symmetrization defect exceeds
    ``HARD_HERM_LIMIT`` (an under-resolved grid).
    """
    tol = tolerances or DEFAULT_TOLERANCES
    s = sample_cycle(model, mu, grid)
    ds = spectral_derivative(s, grid)
    return [
        _shift_at_node(s, ds, i, grid.times[i], mu, tol)
        for i in range(grid.samples)
    ]


def energy_shift_at(model: PumpModel, t: float, mu: float, grid: CycleGrid,
                    tolerances: Tolerances | None = None) -> EnergyShift:
    """Energy shift at one arbitrary time.

    Samples the cycle on the uniform grid offset so that ``t`` is its
    first node; FFT differentiation is insensitive to the origin shift.
    """
    tol = tolerances or DEFAULT_TOLERANCES
    s = np.stack([model.eval(t + ti, mu).array for ti in grid.times])
    ds = spectral_derivative(s, grid)
    return _shift_at_node(s, ds, 0, t, mu, tol)


def energy_shift_fd(model: PumpModel, t: float, mu: float, grid: CycleGrid,
                    tolerances: Tolerances | None = None) -> EnergyShift:
    """Finite-difference cross-check of the spectral energy shift.

    Differentiates S in time by a fourth-order central difference with
    step ``T/(8N)`` instead of the FFT route; useful for validating the
    spectral pipeline on a new model.
    """
    tol = tolerances or DEFAULT_TOLERANCES
    step = grid.period / (8.0 * grid.samples)
    s = model.eval(t, mu).array
    ds_dt = central_derivative(lambda u: model.eval(u, mu).array, t, step)
    raw = 1j * (ds_dt @ s.conj().T)
    herm = HermitianMatrix(raw)
    if herm.hermiticity_defect > HARD_HERM_LIMIT:
        raise NumericalFailure(
            f"hermiticity defect {herm.hermiticity_defect:.3e} at t={t:.6g} "
            f"exceeds {HARD_HERM_LIMIT:g}"
        )
    warning = None
    if herm.hermiticity_defect >= tol.tol_herm:
        warning = f"hermiticity defect {herm.hermiticity_defect:.3e} at t={t:.6g}"
    return EnergyShift(herm, float(t), float(mu), herm.hermiticity_defect, warning)


def energy_shift_rows(model: PumpModel, mu: float, grid: CycleGrid) -> np.ndarray:
    """Energy shift assembled from row overlaps ``i <psi_k | dpsi_j/dt>``.

    ``psi_j`` is the j-th row of S and ``<a|b> = sum conj(a_i) b_i``
    (conjugation on the first argument, which is what makes this route
    agree entrywise with the matrix product of :func:`energy_shift_cycle`).
    Returns the raw, unsymmetrized (N, n, n) array -- an independent code
    path used to cross-check the matrix route.
    """
    s = sample_cycle(model, mu, grid)
    ds = spectral_derivative(s, grid)
    n = model.n_channels
    out = np.empty_like(s)
    for i in range(grid.samples):
        for j in range(n):
            for k in range(n):
                out[i, j, k] = 1j * np.vdot(s[i, k, :], ds[i, j, :])
    return out


def time_delay(model: PumpModel, t: float, mu: float, dE: float) -> TimeDelay:
    """Wigner time delay ``-i dS/dE S^dag`` at (t, mu).

    The energy derivative uses a fourth-order central difference with
    step ``dE``, whose stencil reaches mu +/- 2*dE; all five stencil
    energies must lie inside the model's window.
    """
    if dE <= 0:
        raise ValueError("dE must be positive")
    lo, hi = model.energy_window
    if mu - 2.0 * dE < lo or mu + 2.0 * dE > hi:
        raise EnergyOutOfWindow(
            f"stencil [mu-2dE, mu+2dE] = [{mu - 2 * dE:g}, {mu + 2 * dE:g}] "
            f"exceeds window [{lo:g}, {hi:g}]"
        )
    s = model.eval(t, mu).array
    ds_de = central_derivative(lambda energy: model.eval(t, energy).array, mu, dE)
    return TimeDelay(HermitianMatrix(-1j * (ds_de @ s.conj().T)), float(t), float(mu))


def _default_de(model: PumpModel) -> float:
    lo, hi = model.energy_window
    return ENERGY_STEP_FRACTION * (hi - lo)


def delay_scale(model: PumpModel, mu: float, grid: CycleGrid,
                dE: float | None = None) -> float:
    """Largest spectral norm of the time delay over the cycle (tau)."""
    step = _default_de(model) if dE is None else dE
    return max(
        float(np.linalg.norm(time_delay(model, t, mu, step).array, ord=2))
        for t in grid.times
    )


def adiabaticity(model: PumpModel, mu: float, grid: CycleGrid,
                 dE: float | None = None) -> float:
    """Adiabaticity parameter ``epsilon = omega * tau``.

    ``omega = 2*pi/T`` and tau is the conservative choice
    :func:`delay_scale`, the largest time-delay norm over the cycle.
    The pump formulas assume epsilon << 1; the value is reported with
    every analysis so out-of-regime parameter choices are visible.
    """
    return (2.0 * np.pi / model.period) * delay_scale(model, mu, grid, dE)


def velocity_split(e: EnergyShift) -> VelocitySplit:
    """Split each row's squared velocity into fiber and base parts.

    fiber_j = |E_jj|^2 (phase motion), base_j = sum_{k != j} |E_jk|^2
    (motion in projective space); their sum is the diagonal of E^2.
    """
    mags = np.abs(e.array) ** 2
    fiber = np.diag(mags).copy()
    base = mags.sum(axis=1) - fiber
    return VelocitySplit(fiber=fiber, base=base)
