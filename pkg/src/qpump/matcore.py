"""Dense complex matrix numerics on periodic cycles.

Certified unitary/Hermitian wrappers plus spectral differentiation and
quadrature on uniform periodic time grids.  Natural units are used across
the whole package: hbar = e = 1, so Planck's constant is ``2*pi`` and the
von Klitzing resistance quantum ``R_K = h/e**2 = 2*pi``.

Every value here is immutable after construction and every operation is a
pure function of its inputs, so concurrent read-only use is safe.
Reductions rely on numpy's fixed-order summation, which keeps grid sweeps
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import GridMismatch, NumericalFailure, SingularInput

__all__ = [
    "PLANCK",
    "R_K",
    "Tolerances",
    "DEFAULT_TOLERANCES",
    "ComplexMatrix",
    "UnitaryMatrix",
    "HermitianMatrix",
    "CycleGrid",
    "unitarize",
    "spectral_derivative",
    "periodic_integral",
    "central_derivative",
]

PLANCK = 2.0 * np.pi  #: h in natural units (hbar = 1)
R_K = 2.0 * np.pi     #: von Klitzing resistance h/e**2 in natural units


@dataclass(frozen=True)
class Tolerances:
    """Central numerical tolerances.

    Attributes
    ----------
    tol_unitary : float
        Frobenius norm allowed in ``S^dag S - I`` when certifying a
        unitary matrix.
    tol_herm : float
        Relative non-Hermiticity of a computed energy shift above which a
        warning is attached to the value.
    tol_opt : float
        Off-diagonal ratio of the energy shift below which a pump counts
        as optimal.  Chosen far above the ~1e-11 noise floor of spectral
        differentiation and far below genuine non-optimality.
    tol_charge : float
        Allowed gap between a cycle charge and its winding integer.
    """

    tol_unitary: float = 1e-10
    tol_herm: float = 1e-6
    tol_opt: float = 1e-8
    tol_charge: float = 1e-8

    def updated(self, **overrides: float) -> "Tolerances":
        return replace(self, **overrides)


DEFAULT_TOLERANCES = Tolerances()


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class ComplexMatrix:
    """Immutable square complex matrix with certified finite entries."""

    __slots__ = ("_array",)

    def __init__(self, array):
        a = np.array(getattr(array, "array", array), dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise ValueError("matrix dimension must be at least 1")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        self._array = _frozen(a)

    @property
    def array(self) -> np.ndarray:
        return self._array

    @property
    def dim(self) -> int:
        return self._array.shape[0]

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"ComplexMatrix(dim={self.dim})"


class UnitaryMatrix:
    """Square complex matrix certified unitary at construction.

    Construction fails with :class:`NumericalFailure` if the Frobenius
    defect ``||S^dag S - I||_F`` exceeds ``tol`` (default
    ``Tolerances.tol_unitary``).
    """

    __slots__ = ("inner", "unitarity_defect")

    def __init__(self, array, tol: float | None = None):
        inner = array if isinstance(array, ComplexMatrix) else ComplexMatrix(array)
        a = inner.array
        defect = float(np.linalg.norm(a.conj().T @ a - np.eye(inner.dim)))
        limit = DEFAULT_TOLERANCES.tol_unitary if tol is None else tol
        if defect > limit:
            raise NumericalFailure(
                f"unitarity defect {defect:.3e} exceeds tolerance {limit:g}"
            )
        self.inner = inner
        self.unitarity_defect = defect

    @property
    def array(self) -> np.ndarray:
        return self.inner.array

    @property
    def dim(self) -> int:
        return self.inner.dim

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"UnitaryMatrix(dim={self.dim}, defect={self.unitarity_defect:.2e})"


class HermitianMatrix:
    """Hermitian matrix stored in exactly self-adjoint form.

    The constructor replaces its input M by ``(M + M^dag)/2`` -- an
    operation that is exactly self-adjoint in IEEE arithmetic -- and
    records the relative size of the discarded anti-Hermitian part as
    ``hermiticity_defect`` for diagnostics.
    """

    __slots__ = ("_array", "hermiticity_defect")

    def __init__(self, array):
        raw = ComplexMatrix(array).array
        anti = raw - raw.conj().T
        scale = float(np.linalg.norm(raw))
        self.hermiticity_defect = float(np.linalg.norm(anti)) / scale if scale > 0.0 else 0.0
        self._array = _frozen(0.5 * (raw + raw.conj().T))

    @property
    def array(self) -> np.ndarray:
        return self._array

    @property
    def dim(self) -> int:
        return self._array.shape[0]

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"HermitianMatrix(dim={self.dim}, defect={self.hermiticity_defect:.2e})"


@dataclass(frozen=True, eq=False)
class CycleGrid:
    """Uniform time grid over one pump period.

    ``samples`` must be a power of two (radix-2 FFT differentiation) and
    at least 8.  Node i sits at ``i*period/samples``; the endpoint
    ``t = period`` is identified with ``t = 0`` by periodicity.
    """

    period: float
    samples: int
    times: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (isinstance(self.period, (int, float)) and np.isfinite(self.period) and self.period > 0):
            raise ValueError("period must be a positive finite real")
        n = self.samples
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise ValueError("samples must be an integer")
        if n < 8 or n & (n - 1):
            raise ValueError(f"samples must be a power of two >= 8, got {n}")
        object.__setattr__(self, "period", float(self.period))
        object.__setattr__(self, "samples", int(n))
        times = np.arange(self.samples) * (self.period / self.samples)
        object.__setattr__(self, "times", _frozen(times))

    @property
    def dt(self) -> float:
        return self.period / self.samples


def unitarize(m) -> UnitaryMatrix:
    """Project a nonsingular matrix onto the unitary group.

    Returns the unitary polar factor U V^dag from the singular value
    decomposition ``m = U diag(s) V^dag``; an already-unitary input is
    returned unchanged up to rounding.

    Raises
    ------
    SingularInput
        If the smallest singular value is at or below 1e-12.
    """
    a = m.array if hasattr(m, "array") else ComplexMatrix(m).array
    u, s, vh = np.linalg.svd(a)
    if s[-1] <= 1e-12:
        raise SingularInput(
            f"smallest singular value {s[-1]:.3e} <= 1e-12; no unitary polar factor"
        )
    return UnitaryMatrix(u @ vh)


def _as_stack(samples, grid: CycleGrid) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        stack = samples
    else:
        if len(samples) != grid.samples:
            raise GridMismatch(
                f"got {len(samples)} samples for a grid of {grid.samples} nodes"
            )
        stack = np.stack([np.asarray(getattr(s, "array", s), dtype=np.complex128) for s in samples])
    if stack.shape[0] != grid.samples:
        raise GridMismatch(
            f"got {stack.shape[0]} samples for a grid of {grid.samples} nodes"
        )
    return stack


def spectral_derivative(samples, grid: CycleGrid):
    """Differentiate a periodic sequence of matrices with respect to time.

    Entrywise Fourier differentiation on the cycle grid: exact for
    trigonometric polynomials of degree < N/2 sampled on N nodes.  The
    Nyquist coefficient (mode N/2) carries no derivative information for
    data sampled on N points and is dropped.

    Accepts either an ``(N, ...)`` complex array (returned as an array) or
    a sequence of matrices / matrix wrappers (returned as a list of
    :class:`ComplexMatrix`).
    """
    wrap = not isinstance(samples, np.ndarray)
    stack = _as_stack(samples, grid)
    n = grid.samples
    freq = 2j * np.pi * np.fft.fftfreq(n, d=grid.dt)
    freq[n // 2] = 0.0
    shape = (n,) + (1,) * (stack.ndim - 1)
    out = np.fft.ifft(np.fft.fft(stack, axis=0) * freq.reshape(shape), axis=0)
    if wrap:
        return [ComplexMatrix(m) for m in out]
    return out


def periodic_integral(samples, grid: CycleGrid) -> complex:
    """Integrate scalar samples over one period.

    Trapezoidal rule, which collapses to the rectangle rule by
    periodicity: ``(T/N) * sum(samples)``.  Spectrally accurate for
    smooth periodic integrands.
    """
    vals = np.asarray(samples)
    if vals.ndim != 1:
        raise ValueError("periodic_integral expects a flat sequence of scalars")
    if vals.shape[0] != grid.samples:
        raise GridMismatch(
            f"got {vals.shape[0]} samples for a grid of {grid.samples} nodes"
        )
    return complex(grid.dt * vals.sum())


def central_derivative(f: Callable[[float], np.ndarray], x: float, step: float):
    """Fourth-order central difference of ``f`` at ``x`` with the given step.

    Evaluates f at x +/- step and x +/- 2*step.  The stencil is grouped
    into paired differences so a constant f yields exactly zero.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    inner = f(x + step) - f(x - step)
    outer = f(x + 2.0 * step) - f(x - 2.0 * step)
    return (8.0 * inner - outer) / (12.0 * step)
