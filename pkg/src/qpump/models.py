"""Built-in pump models and configuration parsing.

A pump model is an evaluatable family ``(t, E) -> S`` of frozen unitary
scattering matrices, periodic in t with the pump period and defined for
energies inside a validity window.  Four families are built in:

``flux-loop``
    Two channels reflecting off a loop threaded by a linearly ramped
    flux: ``S = diag(exp(i(k(E)l + Phi(t))), exp(i(k(E)l - Phi(t))))``
    with ``Phi(t) = 2*pi*w*t/T``.  The dispersion is linear, ``E = v*k``,
    and the loop length enters through the dimensionless phase
    ``k_ell = k(mu)*l`` at the reference chemical potential, so the phase
    at energy E is ``k_ell*E/mu``.
``perturbed-flux-loop``
    The flux loop left-multiplied by a real rotation
    ``R(delta*sin(2*pi*t/T))``, which mixes the channels and pulls the
    cycle charge off its integer value; ``delta = 0`` recovers the flux
    loop exactly.
``diagonal-times-constant``
    ``S(t) = U_d(t) S0`` with ``U_d`` a diagonal unitary whose phases are
    low-degree trigonometric polynomials plus integer windings, and S0 a
    fixed unitary.  Energy independent.
``random-smooth-path``
    ``S(t) = exp(i H(t)) S0`` with H a Hermitian trigonometric polynomial
    drawn from a seeded generator.  Energy independent; intended as
    property-test fodder.

All model parameters are flat name -> real maps so they can live in JSON
configuration files; see :class:`ModelConfig` for the file schema.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

from .errors import (
    BadParamRange,
    ConfigError,
    EnergyOutOfWindow,
    MissingParam,
    UnknownModel,
    UnknownParam,
)
from .matcore import DEFAULT_TOLERANCES, Tolerances, UnitaryMatrix, unitarize

__all__ = [
    "SplitMix64",
    "uniform_stream",
    "PumpModel",
    "ModelConfig",
    "ParamInfo",
    "ModelInfo",
    "REGISTRY",
    "build",
    "build_model",
    "eval_s",
    "time_warp",
    "reparameterized",
]

_TWO_PI = 2.0 * np.pi


# --------------------------------------------------------------------------
# Deterministic pseudo-randomness.
#
# SplitMix64 (the Steele/Lea/Flood mixer).  State advances by the golden
# gamma 0x9E3779B97F4A7C15 modulo 2**64 and each output is
#     z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
#     z ^= z >> 27;  z *= 0x94D049BB133111EB
#     z ^= z >> 31
# Uniform doubles take the top 53 bits.  The constants are spelled out so
# fixtures can be reproduced outside Python.
# --------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Seeded 64-bit generator with documented constants."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """53-bit uniform double in [lo, hi)."""
        return lo + (hi - lo) * ((self.next_u64() >> 11) * 2.0**-53)


def uniform_stream(seed: int, count: int) -> np.ndarray:
    """Vectorized SplitMix64 stream: the same numbers ``SplitMix64(seed)``
    would produce, computed statelessly for ``count`` draws in [0, 1)."""
    with np.errstate(over="ignore"):
        idx = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(seed) + idx * np.uint64(_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


# --------------------------------------------------------------------------
# Model values.
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PumpModel:
    """Evaluatable family ``(t, E) -> UnitaryMatrix`` over one period.

    Instances are immutable and ``eval`` is pure, so models may be shared
    freely between threads.
    """

    name: str
    n_channels: int
    period: float
    energy_window: tuple[float, float]
    params: Mapping[str, float]
    matrix_fn: Callable[[float, float], np.ndarray] = field(repr=False)
    unitary_tol: float = DEFAULT_TOLERANCES.tol_unitary

    def eval(self, t: float, energy: float) -> UnitaryMatrix:
        """Frozen scattering matrix at time t and energy E (certified unitary)."""
        lo, hi = self.energy_window
        if not (lo <= energy <= hi):
            raise EnergyOutOfWindow(
                f"energy {energy:g} outside window [{lo:g}, {hi:g}] of model '{self.name}'"
            )
        return UnitaryMatrix(self.matrix_fn(float(t), float(energy)), tol=self.unitary_tol)


def eval_s(model: PumpModel, t: float, energy: float) -> UnitaryMatrix:
    """Evaluate the frozen scattering matrix; alias for ``model.eval``."""
    return model.eval(t, energy)


# --------------------------------------------------------------------------
# Parameter validation helpers.
# --------------------------------------------------------------------------


def _param(params: dict, key: str, model: str, default=None, *, required=False,
           minimum=None, positive=False, integer=False) -> float:
    if key not in params:
        if required:
            raise MissingParam(f"params.{key}", f"model '{model}' requires parameter '{key}'")
        value = default
    else:
        value = params[key]
    if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
        raise BadParamRange(f"params.{key}", "must be a real number")
    value = float(value)
    if not math.isfinite(value):
        raise BadParamRange(f"params.{key}", "must be finite")
    if integer and value != round(value):
        raise BadParamRange(f"params.{key}", f"must be an integer, got {value!r}")
    if positive and value <= 0:
        raise BadParamRange(f"params.{key}", f"must be positive, got {value!r}")
    if minimum is not None and value < minimum:
        raise BadParamRange(f"params.{key}", f"must be >= {minimum}, got {value!r}")
    return value


def _reject_unknown(params: dict, allowed: set[str], model: str) -> None:
    for key in params:
        if key not in allowed:
            raise UnknownParam(
                f"params.{key}", f"model '{model}' does not understand parameter '{key}'"
            )


def _rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def _draw_hermitian(n: int, rng: SplitMix64, scale: float) -> np.ndarray:
    """Hermitian matrix with entries uniform in [-scale, scale).

    Draw order (documented for reproducibility): for each row j, the real
    diagonal entry, then for k > j the real and imaginary parts of the
    upper off-diagonal entry.
    """
    h = np.zeros((n, n), dtype=complex)
    for j in range(n):
        h[j, j] = rng.uniform(-scale, scale)
        for k in range(j + 1, n):
            re = rng.uniform(-scale, scale)
            im = rng.uniform(-scale, scale)
            h[j, k] = re + 1j * im
            h[k, j] = re - 1j * im
    return h


def _draw_unitary(n: int, rng: SplitMix64) -> np.ndarray:
    """Unitary polar factor of a random complex matrix (row-major draws,
    real part before imaginary part)."""
    m = np.empty((n, n), dtype=complex)
    for j in range(n):
        for k in range(n):
            re = rng.uniform(-1.0, 1.0)
            im = rng.uniform(-1.0, 1.0)
            m[j, k] = re + 1j * im
    return unitarize(m).array


# --------------------------------------------------------------------------
# Built-in model builders.  Each returns (n_channels, matrix_fn, params).
# --------------------------------------------------------------------------


def _build_flux_loop(params, period, window, mu):
    name = "flux-loop"
    k_ell = _param(params, "k_ell", name, required=True, minimum=0.0)
    w = int(_param(params, "w", name, default=1, integer=True))
    v = _param(params, "v", name, default=1.0, positive=True)
    _reject_unknown(params, {"k_ell", "w", "v"}, name)

    # Linear dispersion E = v*k with k(mu)*l = k_ell fixes l = k_ell*v/mu,
    # so the loop phase at energy E is k_ell*E/mu (independent of v).
    def matrix(t, energy):
        loop = k_ell * energy / mu
        flux = _TWO_PI * w * t / period
        return np.diag(np.exp(1j * np.array([loop + flux, loop - flux])))

    return 2, matrix, {"k_ell": k_ell, "w": float(w), "v": v}


def _build_perturbed_flux_loop(params, period, window, mu):
    name = "perturbed-flux-loop"
    delta = _param(params, "delta", name, required=True)
    base_params = {k: v for k, v in params.items() if k != "delta"}
    n, base, norm = _build_flux_loop(base_params, period, window, mu)

    # The rotation multiplies from the left: a right factor commutes into
    # the diagonal of E and would leave every cycle charge exactly
    # quantized, defeating the point of the perturbation.
    def matrix(t, energy):
        return _rotation(delta * np.sin(_TWO_PI * t / period)) @ base(t, energy)

    norm["delta"] = delta
    return n, matrix, norm


_DTC_DEGREE = 2  # trig-polynomial degree of the per-channel phases


def _build_diagonal_times_constant(params, period, window, mu):
    name = "diagonal-times-constant"
    n = int(_param(params, "n", name, default=2, integer=True, minimum=1))
    s0_seed = int(_param(params, "s0_seed", name, default=0, integer=True, minimum=0))
    allowed = {"n", "s0_seed"}
    windings = np.zeros(n)
    cos_coef = np.zeros((n, _DTC_DEGREE))
    sin_coef = np.zeros((n, _DTC_DEGREE))
    norm = {"n": float(n), "s0_seed": float(s0_seed)}
    for j in range(1, n + 1):
        allowed.add(f"w{j}")
        windings[j - 1] = _param(params, f"w{j}", name, default=0, integer=True)
        norm[f"w{j}"] = windings[j - 1]
        for m in range(1, _DTC_DEGREE + 1):
            allowed.update({f"a{j}_{m}", f"b{j}_{m}"})
            cos_coef[j - 1, m - 1] = _param(params, f"a{j}_{m}", name, default=0.0)
            sin_coef[j - 1, m - 1] = _param(params, f"b{j}_{m}", name, default=0.0)
            norm[f"a{j}_{m}"] = cos_coef[j - 1, m - 1]
            norm[f"b{j}_{m}"] = sin_coef[j - 1, m - 1]
    _reject_unknown(params, allowed, name)

    s0 = np.eye(n, dtype=complex) if s0_seed == 0 else _draw_unitary(n, SplitMix64(s0_seed))
    modes = np.arange(1, _DTC_DEGREE + 1)

    def matrix(t, energy):
        arg = _TWO_PI * t / period
        phases = windings * arg
        phases = phases + cos_coef @ np.cos(modes * arg) + sin_coef @ np.sin(modes * arg)
        return np.exp(1j * phases)[:, None] * s0

    return n, matrix, norm


def _build_random_smooth_path(params, period, window, mu):
    name = "random-smooth-path"
    n = int(_param(params, "n", name, default=2, integer=True, minimum=1))
    seed = int(_param(params, "seed", name, default=0, integer=True, minimum=0))
    degree = int(_param(params, "degree", name, default=3, integer=True, minimum=0))
    amplitude = _param(params, "amplitude", name, default=1.0, minimum=0.0)
    _reject_unknown(params, {"n", "seed", "degree", "amplitude"}, name)

    rng = SplitMix64(seed)
    # Draw order: constant Hermitian term, then (cos, sin) pairs for each
    # mode 1..degree, then the constant unitary S0.  Mode amplitudes decay
    # like 1/(1+m) so the path is comfortably band limited.
    const = _draw_hermitian(n, rng, amplitude)
    cos_terms = []
    sin_terms = []
    for m in range(1, degree + 1):
        cos_terms.append(_draw_hermitian(n, rng, amplitude / (1.0 + m)))
        sin_terms.append(_draw_hermitian(n, rng, amplitude / (1.0 + m)))
    s0 = _draw_unitary(n, rng)

    def matrix(t, energy):
        arg = _TWO_PI * t / period
        h = const.copy()
        for m in range(1, degree + 1):
            h += cos_terms[m - 1] * np.cos(m * arg) + sin_terms[m - 1] * np.sin(m * arg)
        vals, vecs = np.linalg.eigh(h)
        return (vecs * np.exp(1j * vals)) @ vecs.conj().T @ s0

    norm = {"n": float(n), "seed": float(seed), "degree": float(degree), "amplitude": amplitude}
    return n, matrix, norm


@dataclass(frozen=True)
class ParamInfo:
    name: str
    default: float | None  # None marks a required parameter
    note: str


@dataclass(frozen=True, eq=False)
class ModelInfo:
    name: str
    description: str
    n_channels: str
    params: tuple[ParamInfo, ...]
    builder: Callable = field(repr=False)


REGISTRY: dict[str, ModelInfo] = {
    info.name: info
    for info in [
        ModelInfo(
            name="flux-loop",
            description="Two reflecting channels on a flux-threaded loop; "
            "diagonal S with phases k_ell*E/mu +/- 2*pi*w*t/T.",
            n_channels="2",
            params=(
                ParamInfo("k_ell", None, "loop phase k(mu)*l at the reference energy, >= 0"),
                ParamInfo("w", 1.0, "integer flux winding per cycle"),
                ParamInfo("v", 1.0, "dispersion velocity E = v*k, > 0"),
            ),
            builder=_build_flux_loop,
        ),
        ModelInfo(
            name="perturbed-flux-loop",
            description="Flux loop left-multiplied by a real rotation "
            "R(delta*sin(2*pi*t/T)); mixes the channels and "
            "de-quantizes the cycle charge.",
            n_channels="2",
            params=(
                ParamInfo("k_ell", None, "loop phase at the reference energy, >= 0"),
                ParamInfo("delta", None, "rotation amplitude; 0 recovers flux-loop"),
                ParamInfo("w", 1.0, "integer flux winding per cycle"),
                ParamInfo("v", 1.0, "dispersion velocity, > 0"),
            ),
            builder=_build_perturbed_flux_loop,
        ),
        ModelInfo(
            name="diagonal-times-constant",
            description="S(t) = U_d(t) S0 with diagonal phases "
            "2*pi*w<j>*t/T + a<j>_m*cos(2*pi*m*t/T) + b<j>_m*sin(...), "
            "m = 1..2, and S0 seeded from s0_seed (0 = identity). "
            "Energy independent.",
            n_channels="n",
            params=(
                ParamInfo("n", 2.0, "number of channels, integer >= 1"),
                ParamInfo("s0_seed", 0.0, "seed for the constant unitary; 0 keeps identity"),
                ParamInfo("w<j>", 0.0, "integer winding of channel j (1-based)"),
                ParamInfo("a<j>_<m>", 0.0, "cosine coefficient of channel j, mode m"),
                ParamInfo("b<j>_<m>", 0.0, "sine coefficient of channel j, mode m"),
            ),
            builder=_build_diagonal_times_constant,
        ),
        ModelInfo(
            name="random-smooth-path",
            description="S(t) = exp(i H(t)) S0 with H a seeded Hermitian "
            "trigonometric polynomial; energy independent.",
            n_channels="n",
            params=(
                ParamInfo("n", 2.0, "number of channels, integer >= 1"),
                ParamInfo("seed", 0.0, "SplitMix64 seed, integer >= 0"),
                ParamInfo("degree", 3.0, "trig-polynomial degree, integer >= 0"),
                ParamInfo("amplitude", 1.0, "coefficient scale, >= 0"),
            ),
            builder=_build_random_smooth_path,
        ),
    ]
}


def build(name: str, params: Mapping[str, float] | None = None, *,
          period: float = 1.0, energy_window: tuple[float, float] = (0.5, 1.5),
          mu: float = 1.0, unitary_tol: float | None = None) -> PumpModel:
    """Build a registered model directly (the configuration-free API).

    Raises :class:`UnknownModel`, :class:`MissingParam`,
    :class:`BadParamRange` or :class:`UnknownParam`, each naming the
    offending key.
    """
    if not (isinstance(period, (int, float)) and math.isfinite(period) and period > 0):
        raise ConfigError("cycle.period", "must be a positive finite real")
    lo, hi = energy_window
    if not (0 < lo < hi):
        raise ConfigError("energy.window", f"window must satisfy 0 < lo < hi, got [{lo!r}, {hi!r}]")
    if not (lo <= mu <= hi):
        raise ConfigError("energy.mu", f"mu={mu!r} outside window [{lo!r}, {hi!r}]")
    info = REGISTRY.get(name)
    if info is None:
        known = ", ".join(sorted(REGISTRY))
        raise UnknownModel("model", f"unknown model '{name}'; built-ins: {known}")
    n, matrix_fn, norm = info.builder(dict(params or {}), float(period), (float(lo), float(hi)), float(mu))
    return PumpModel(
        name=name,
        n_channels=n,
        period=float(period),
        energy_window=(float(lo), float(hi)),
        params=MappingProxyType(norm),
        matrix_fn=matrix_fn,
        unitary_tol=DEFAULT_TOLERANCES.tol_unitary if unitary_tol is None else unitary_tol,
    )


# --------------------------------------------------------------------------
# Configuration files.
# --------------------------------------------------------------------------

_TOP_KEYS = ("model", "params", "cycle", "energy", "tolerances", "beta")
_REQUIRED_TOP = ("model", "params", "cycle", "energy")
_TOLERANCE_KEYS = ("tol_unitary", "tol_herm", "tol_opt", "tol_charge")


def _real(value, fieldname: str, *, positive=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(fieldname, "must be a real number")
    v = float(value)
    if not math.isfinite(v):
        raise ConfigError(fieldname, "must be finite")
    if positive and v <= 0:
        raise ConfigError(fieldname, f"must be positive, got {v!r}")
    return v


def _integer(value, fieldname: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(fieldname, "must be an integer")
    return value


def _power_of_two(value, fieldname: str, minimum: int = 1) -> int:
    n = _integer(value, fieldname)
    if n < minimum or n & (n - 1):
        raise ConfigError(fieldname, f"must be a power of two >= {minimum}, got {n}")
    return n


def _section(doc: dict, key: str, keys: tuple[str, ...]) -> dict:
    sec = doc[key]
    if not isinstance(sec, dict):
        raise ConfigError(key, "must be an object")
    for k in sec:
        if k not in keys:
            raise ConfigError(f"{key}.{k}", "unknown field")
    for k in keys:
        if k not in sec:
            raise ConfigError(f"{key}.{k}", "missing required field")
    return sec


@dataclass(frozen=True, eq=False)
class ModelConfig:
    """Parsed analysis configuration (strict JSON schema).

    Top-level fields: ``model`` (registry name), ``params`` (name -> real),
    ``cycle`` = {period, samples}, ``energy`` = {mu, window, samples},
    optional ``tolerances`` (subset of tol_unitary/tol_herm/tol_opt/
    tol_charge) and optional ``beta`` (inverse temperature).  Unknown keys
    anywhere are an error.
    """

    model: str
    params: dict[str, float]
    period: float
    samples: int
    mu: float
    window: tuple[float, float]
    energy_samples: int
    tolerances: Tolerances
    beta: float | None
    raw: dict = field(repr=False)

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config", "top level must be a JSON object")
        for key in doc:
            if key not in _TOP_KEYS:
                raise ConfigError(key, "unknown field")
        for key in _REQUIRED_TOP:
            if key not in doc:
                raise ConfigError(key, "missing required field")

        if not isinstance(doc["model"], str):
            raise ConfigError("model", "must be a string")
        if not isinstance(doc["params"], dict):
            raise ConfigError("params", "must be an object")
        params = {k: _real(v, f"params.{k}") for k, v in doc["params"].items()}

        cycle = _section(doc, "cycle", ("period", "samples"))
        period = _real(cycle["period"], "cycle.period", positive=True)
        samples = _power_of_two(cycle["samples"], "cycle.samples", minimum=8)

        energy = _section(doc, "energy", ("mu", "window", "samples"))
        window = energy["window"]
        if not (isinstance(window, list) and len(window) == 2):
            raise ConfigError("energy.window", "must be a two-element array [lo, hi]")
        lo = _real(window[0], "energy.window", positive=True)
        hi = _real(window[1], "energy.window")
        if not lo < hi:
            raise ConfigError("energy.window", f"must satisfy 0 < lo < hi, got [{lo!r}, {hi!r}]")
        mu = _real(energy["mu"], "energy.mu")
        if not (lo <= mu <= hi):
            raise ConfigError("energy.mu", f"mu={mu!r} outside window [{lo!r}, {hi!r}]")
        energy_samples = _power_of_two(energy["samples"], "energy.samples")

        tolerances = DEFAULT_TOLERANCES
        if "tolerances" in doc:
            tol = doc["tolerances"]
            if not isinstance(tol, dict):
                raise ConfigError("tolerances", "must be an object")
            overrides = {}
            for k, v in tol.items():
                if k not in _TOLERANCE_KEYS:
                    raise ConfigError(f"tolerances.{k}", "unknown tolerance")
                overrides[k] = _real(v, f"tolerances.{k}", positive=True)
            tolerances = tolerances.updated(**overrides)

        beta = None
        if "beta" in doc:
            beta = _real(doc["beta"], "beta", positive=True)

        return cls(
            model=doc["model"],
            params=params,
            period=period,
            samples=samples,
            mu=mu,
            window=(lo, hi),
            energy_samples=energy_samples,
            tolerances=tolerances,
            beta=beta,
            raw=doc,
        )

    @classmethod
    def from_file(cls, path) -> "ModelConfig":
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from exc
        return cls.from_dict(doc)


def build_model(config: ModelConfig) -> PumpModel:
    """Build the model a configuration refers to."""
    return build(
        config.model,
        config.params,
        period=config.period,
        energy_window=config.window,
        mu=config.mu,
        unitary_tol=config.tolerances.tol_unitary,
    )


# --------------------------------------------------------------------------
# Time reparameterization (used by the invariance checks).
# --------------------------------------------------------------------------


def time_warp(period: float, amplitude: float = 0.1):
    """Smooth monotone cycle reparameterization and its derivative.

    ``f(t) = t + amplitude*(T/2pi)*sin(2*pi*t/T)`` with
    ``f'(t) = 1 + amplitude*cos(2*pi*t/T)``; monotone for |amplitude| < 1
    and compatible with periodicity (``f(t+T) = f(t) + T``).
    """
    if not abs(amplitude) < 1.0:
        raise ValueError("|amplitude| must be < 1 to keep the warp monotone")

    def f(t):
        return t + amplitude * (period / _TWO_PI) * np.sin(_TWO_PI * t / period)

    def fprime(t):
        return 1.0 + amplitude * np.cos(_TWO_PI * t / period)

    return f, fprime


def reparameterized(model: PumpModel, amplitude: float = 0.1) -> PumpModel:
    """The same pump traversed along the warped time ``t -> f(t)``."""
    f, _ = time_warp(model.period, amplitude)

    def matrix(t, energy):
        return model.matrix_fn(f(t), energy)

    return PumpModel(
        name=f"{model.name}+warp",
        n_channels=model.n_channels,
        period=model.period,
        energy_window=model.energy_window,
        params=model.params,
        matrix_fn=matrix,
        unitary_tol=model.unitary_tol,
    )
