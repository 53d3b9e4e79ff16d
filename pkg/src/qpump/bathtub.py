"""Brute-force side of the dissipation bound.

A time-independent particle source feeding a single channel is fully
described by a filling ``0 <= n(k) <= 1`` of right-moving modes.  Charge
and energy flux are integrals over the measure ``eps'(k) dk``; minimizing
the energy flux at fixed charge flux fills the lowest energies first (the
bathtub principle), giving ``Qdot = mu/2pi`` and ``Edot = mu^2/4pi`` for
the Fermi step at chemical potential mu, hence
``Edot >= pi * Qdot^2 = (R_K/2) Qdot^2``.

Everything here is discretized and independent of the scattering-matrix
machinery, so it serves as an oracle for the bound checked on the
S-matrix side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TargetInfeasible
from .models import uniform_stream

__all__ = [
    "DispersionGrid",
    "linear_dispersion",
    "quadratic_dispersion",
    "Filling",
    "greedy_minimize",
    "analytic_minimum",
    "thermal_step",
    "BoundCheck",
    "verify_bound",
    "two_sided_bound",
    "project_to_qdot",
]

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class DispersionGrid:
    """Discretized right-moving modes of one channel.

    Nodes sit at the right edge of each cell, ``k_i = (i+1)*k_max/n_k``.
    Putting the node energy at or above everything in its cell keeps
    discrete minimizers from undershooting the continuum bound and makes
    the greedy minimum converge to it at a uniform O(dk) rate; it also
    avoids k = 0, where the weight of a quadratic dispersion vanishes.
    Weights are ``w_i = eps'(k_i) * dk``, the cell's share of the energy
    measure.
    """

    kind: str
    k_max: float
    n_k: int
    nodes: np.ndarray = field(repr=False)
    eps: np.ndarray = field(repr=False)
    deps: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_k < 64:
            raise ValueError(f"n_k must be >= 64, got {self.n_k}")
        if not (math.isfinite(self.k_max) and self.k_max > 0):
            raise ValueError("k_max must be a positive finite real")
        # Hypotheses of the bound: eps(0) = 0 and k * eps'(k) >= 0.
        if np.any(self.nodes * self.deps < 0.0) or np.any(self.weights < 0.0):
            raise ValueError("dispersion must satisfy k * eps'(k) >= 0 on all nodes")
        for a in (self.nodes, self.eps, self.deps, self.weights):
            a.setflags(write=False)

    @property
    def dk(self) -> float:
        return self.k_max / self.n_k

    @property
    def max_qdot(self) -> float:
        """Largest charge flux any filling can carry."""
        return float(self.weights.sum()) / _TWO_PI


def _nodes(k_max: float, n_k: int) -> np.ndarray:
    return (np.arange(int(n_k)) + 1.0) * (k_max / int(n_k))


def linear_dispersion(k_max: float, n_k: int, velocity: float = 1.0) -> DispersionGrid:
    """``eps(k) = v*k`` (constant weight per cell)."""
    if velocity <= 0:
        raise ValueError("velocity must be positive")
    k = _nodes(k_max, n_k)
    deps = np.full_like(k, float(velocity))
    return DispersionGrid(
        kind="linear", k_max=float(k_max), n_k=int(n_k),
        nodes=k, eps=velocity * k, deps=deps, weights=deps * (k_max / n_k),
    )


def quadratic_dispersion(k_max: float, n_k: int, mass: float = 1.0) -> DispersionGrid:
    """``eps(k) = k^2 / 2m``."""
    if mass <= 0:
        raise ValueError("mass must be positive")
    k = _nodes(k_max, n_k)
    deps = k / mass
    return DispersionGrid(
        kind="quadratic", k_max=float(k_max), n_k=int(n_k),
        nodes=k, eps=0.5 * k * k / mass, deps=deps, weights=deps * (k_max / n_k),
    )


@dataclass(frozen=True, eq=False)
class Filling:
    """Occupation of the grid modes with its fluxes.

    ``qdot = (1/2pi) sum n_i w_i`` and
    ``edot = (1/2pi) sum n_i eps_i w_i`` (e = hbar = 1).
    """

    grid: DispersionGrid
    occupation: np.ndarray
    qdot: float
    edot: float

    @classmethod
    def from_occupation(cls, grid: DispersionGrid, occupation) -> "Filling":
        n = np.asarray(occupation, dtype=float)
        if n.shape != (grid.n_k,):
            raise ValueError(f"occupation must have shape ({grid.n_k},), got {n.shape}")
        if np.any(n < -1e-12) or np.any(n > 1.0 + 1e-12):
            raise ValueError("occupations must lie in [0, 1]")
        n = np.clip(n, 0.0, 1.0)
        n.setflags(write=False)
        return cls(
            grid=grid,
            occupation=n,
            qdot=float(n @ grid.weights) / _TWO_PI,
            edot=float((n * grid.eps) @ grid.weights) / _TWO_PI,
        )


def greedy_minimize(grid: DispersionGrid, target_qdot: float) -> Filling:
    """Minimize the energy flux at fixed charge flux.

    Fills modes in ascending order of energy (ties broken by ascending
    node index) until the charge budget is spent; the marginal mode gets
    a fractional occupation.  The objective is linear over a box with one
    linear constraint, so this greedy filling is the exact global
    minimizer of the discrete problem.
    """
    budget = _TWO_PI * target_qdot  # occupied share of the energy measure
    total = float(grid.weights.sum())
    if target_qdot < 0 or budget > total * (1.0 + 1e-12):
        raise TargetInfeasible(
            f"target Qdot {target_qdot!r} outside feasible range [0, {total / _TWO_PI!r}]"
        )
    order = np.lexsort((np.arange(grid.n_k), grid.eps))
    w = grid.weights[order]
    cum = np.cumsum(w)
    n_sorted = np.zeros(grid.n_k)
    if budget >= cum[-1]:
        n_sorted[:] = 1.0
    else:
        m = int(np.searchsorted(cum, budget, side="left"))
        n_sorted[:m] = 1.0
        filled = cum[m - 1] if m > 0 else 0.0
        if w[m] > 0.0:
            n_sorted[m] = (budget - filled) / w[m]
        # zero-weight modes carry no charge; leaving them empty is minimal
    n = np.empty(grid.n_k)
    n[order] = n_sorted
    return Filling.from_occupation(grid, n)


def analytic_minimum(mu: float) -> tuple[float, float]:
    """Continuum minimizer at chemical potential mu: ``(mu/2pi, mu^2/4pi)``."""
    return mu / _TWO_PI, mu * mu / (2.0 * _TWO_PI)


def thermal_step(grid: DispersionGrid, mu: float) -> Filling:
    """Zero-temperature Fermi step ``n_i = 1[eps_i < mu]``."""
    return Filling.from_occupation(grid, (grid.eps < mu).astype(float))


@dataclass(frozen=True)
class BoundCheck:
    """Result of the randomized bound verification.

    ``violations`` counts random fillings with ``Edot < pi*Qdot^2 - 1e-12``
    and ``max_violation`` is the worst positive gap (0.0 when the bound
    held everywhere).  ``greedy_gap_max`` is the largest
    ``Edot_greedy - pi*Qdot^2`` seen at the trial charges -- the
    discretization gap, O(dk) -- and ``step_gap`` the same gap for the
    thermal step at ``mu``.
    """

    trials: int
    violations: int
    max_violation: float
    greedy_gap_max: float
    step_gap: float
    mu: float


def verify_bound(grid: DispersionGrid, trials: int, seed: int = 0,
                 mu: float | None = None) -> BoundCheck:
    """Check ``Edot >= pi * Qdot^2`` on random fillings.

    Each trial draws an independent SplitMix64 stream seeded with
    ``seed + trial`` and fills every mode uniformly in [0, 1).  The
    greedy minimizer is evaluated at each trial's own charge flux, and
    the thermal step at ``mu`` (default: half the band top) is checked
    as the equality case.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    mu = 0.5 * float(grid.eps[-1]) if mu is None else mu

    order = np.lexsort((np.arange(grid.n_k), grid.eps))
    w_sorted = grid.weights[order]
    eps_sorted = grid.eps[order]
    cum_w = np.cumsum(w_sorted)
    cum_e = np.cumsum(eps_sorted * w_sorted)

    def greedy_edot(budget: float) -> float:
        if budget >= cum_w[-1]:
            return float(cum_e[-1]) / _TWO_PI
        m = int(np.searchsorted(cum_w, budget, side="left"))
        filled_w = cum_w[m - 1] if m > 0 else 0.0
        filled_e = cum_e[m - 1] if m > 0 else 0.0
        if w_sorted[m] > 0.0:
            filled_e += (budget - filled_w) * eps_sorted[m]
        return float(filled_e) / _TWO_PI

    violations = 0
    max_violation = 0.0
    greedy_gap_max = 0.0
    for trial in range(trials):
        occ = uniform_stream(seed + trial, grid.n_k)
        filling = Filling.from_occupation(grid, occ)
        bound = np.pi * filling.qdot**2
        gap = bound - filling.edot
        if gap > 1e-12:
            violations += 1
            max_violation = max(max_violation, gap)
        greedy_gap_max = max(
            greedy_gap_max, greedy_edot(_TWO_PI * filling.qdot) - bound
        )

    step = thermal_step(grid, mu)
    step_gap = step.edot - np.pi * step.qdot**2
    return BoundCheck(
        trials=trials,
        violations=violations,
        max_violation=max_violation,
        greedy_gap_max=greedy_gap_max,
        step_gap=float(step_gap),
        mu=float(mu),
    )


def two_sided_bound(mu_minus: float, source: Filling, grid: DispersionGrid) -> tuple[float, float]:
    """Both sides of the dissipation bound for a source feeding a cold
    reservoir at chemical potential ``mu_minus``.

    The reservoir's own fluxes take their continuum values
    ``Qdot_- = mu_-/2pi`` and ``Edot_- = mu_-^2/4pi``; the net fluxes are
    source minus reservoir.  Returns ``(lhs, rhs)`` with
    ``lhs = Edot_net - mu_- * Qdot_net`` and ``rhs = pi * Qdot_net^2``;
    the bound says lhs >= rhs, with equality when the source is itself a
    Fermi sea (up to the O(dk) discretization of the source).
    """
    if mu_minus < 0:
        raise ValueError("mu_minus must be >= 0")
    if source.grid is not grid:
        raise ValueError("source filling was built on a different grid")
    qdot_res, edot_res = analytic_minimum(mu_minus)
    edot_net = source.edot - edot_res
    qdot_net = source.qdot - qdot_res
    lhs = edot_net - mu_minus * qdot_net
    rhs = np.pi * qdot_net**2
    return float(lhs), float(rhs)


def project_to_qdot(grid: DispersionGrid, occupation, target_qdot: float) -> Filling:
    """Feasible filling near ``occupation`` with the exact target flux.

    Shifts all occupations by a common amount and re-clips to [0, 1]; the
    shifted flux is monotone in the shift, so bisection lands on the
    target.  Used to build feasible perturbations when certifying the
    greedy minimizer.
    """
    base = np.asarray(occupation, dtype=float)
    if base.shape != (grid.n_k,):
        raise ValueError(f"occupation must have shape ({grid.n_k},)")
    budget = _TWO_PI * target_qdot
    total = float(grid.weights.sum())
    if target_qdot < 0 or budget > total * (1.0 + 1e-12):
        raise TargetInfeasible(f"target Qdot {target_qdot!r} infeasible")

    def flux(shift: float) -> float:
        return float(np.clip(base + shift, 0.0, 1.0) @ grid.weights)

    lo, hi = -1.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if flux(mid) < budget:
            lo = mid
        else:
            hi = mid
    return Filling.from_occupation(grid, np.clip(base + 0.5 * (lo + hi), 0.0, 1.0))
