"""Analysis pipeline and deterministic report serialization.

Reports are plain JSON documents.  Serialization is deterministic: keys
keep their insertion order, floats are written with 17 significant digits
(enough to round-trip IEEE doubles exactly), and nothing time- or
machine-dependent enters the document, so identical configurations yield
byte-identical reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure
from .matcore import CycleGrid, periodic_integral
from .models import ModelConfig, build_model
from .optimal import OptimalityVerdict, offdiag_ratio, optimality_verdict
from .shift import delay_scale, energy_shift_at, energy_shift_cycle
from .transport import (
    CycleReport,
    InstantReport,
    cycle_charge,
    dissipation,
    instant_report,
    winding_charge,
)

__all__ = [
    "SPEC_VERSION",
    "ADIABATICITY_WARN",
    "format_float",
    "dumps",
    "AnalysisResult",
    "analyze",
    "instant_document",
]

SPEC_VERSION = "1.0"

#: Above this adiabaticity parameter a warning is attached to the report.
ADIABATICITY_WARN = 0.1


def format_float(value: float) -> str:
    """17-significant-digit decimal form that parses back to the same double."""
    out = format(float(value), ".17g")
    if not any(c in out for c in ".eE"):
        out += ".0"
    return out


def _emit(obj, indent: int, out: list) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            out.append(f"{pad}  {json.dumps(str(key))}: ")
            _emit(value, indent + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        out.append("[\n")
        for i, value in enumerate(items):
            out.append(pad + "  ")
            _emit(value, indent + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), indent, out)
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON text (insertion-ordered keys, 17-digit floats)."""
    out: list[str] = []
    _emit(obj, 0, out)
    out.append("\n")
    return "".join(out)


def _instant_entry(report: InstantReport, with_beta: bool) -> dict:
    entry = {
        "t": report.t,
        "Qdot": report.qdot,
        "D": report.total_dissipation,
        "Xs": report.excess,
        "r": report.residual,
    }
    if with_beta:
        entry["Sdot"] = report.sdot
        entry["Ndot"] = report.ndot
    entry["regime_ok"] = report.regime_ok
    return entry


def _verdict_entry(verdict: OptimalityVerdict) -> dict:
    decomposition = None
    if verdict.decomposition is not None:
        s0 = verdict.decomposition.constant.array
        decomposition = {
            "phases": verdict.decomposition.phases,
            "constant_real": s0.real,
            "constant_imag": s0.imag,
        }
    return {
        "is_optimal": verdict.is_optimal,
        "max_offdiag_ratio": verdict.max_offdiag_ratio,
        "worst_time": verdict.worst_time,
        "per_channel_saturation": [bool(b) for b in verdict.per_channel_saturation],
        "decomposition": decomposition,
    }


@dataclass(frozen=True, eq=False)
class AnalysisResult:
    """Analysis outputs: the JSON document plus CSV text of the time series."""

    document: dict
    csv_text: str
    instants: list
    cycle: CycleReport
    verdict: OptimalityVerdict


def _csv_text(instants, ratios, n: int, with_beta: bool) -> str:
    columns = ["t"]
    columns += [f"Qdot_{j + 1}" for j in range(n)]
    columns += [f"D_{j + 1}" for j in range(n)]
    if with_beta:
        columns += [f"Sdot_{j + 1}" for j in range(n)]
        columns += [f"Ndot_{j + 1}" for j in range(n)]
    columns.append("rho")
    lines = [",".join(columns)]
    for report, rho in zip(instants, ratios):
        row = [format_float(report.t)]
        row += [format_float(x) for x in report.qdot]
        row += [format_float(x) for x in report.total_dissipation]
        if with_beta:
            row += [format_float(x) for x in report.sdot]
            row += [format_float(x) for x in report.ndot]
        row.append(format_float(rho))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def analyze(config: ModelConfig) -> AnalysisResult:
    """Run the full cycle analysis a configuration describes."""
    model = build_model(config)
    grid = CycleGrid(config.period, config.samples)
    tol = config.tolerances

    shifts = energy_shift_cycle(model, config.mu, grid, tol)
    tau = delay_scale(model, config.mu, grid)
    omega = 2.0 * np.pi / model.period
    epsilon = omega * tau

    instants = [
        instant_report(e, beta=config.beta, omega=omega, tau=tau) for e in shifts
    ]
    ratios = [offdiag_ratio(e) for e in shifts]
    verdict = optimality_verdict(model, config.mu, grid, tol, shifts=shifts)

    charge = cycle_charge(model, config.mu, grid, tol, shifts=shifts)
    winding = None
    if verdict.is_optimal:
        winding = winding_charge(model, config.mu, grid, tol)
        gap = float(np.max(np.abs(charge - winding)))
        if gap >= tol.tol_charge:
            raise NumericalFailure(
                f"cycle charge differs from winding integers by {gap:.3e} "
                f"(tol_charge {tol.tol_charge:g})"
            )

    rates = np.stack([dissipation(e).total for e in shifts])
    dissipated = np.array([
        periodic_integral(rates[:, j], grid).real for j in range(model.n_channels)
    ])

    cycle = CycleReport(
        charge=charge,
        winding=winding,
        dissipated=dissipated,
        adiabaticity=epsilon,
        optimality=verdict,
        period=grid.period,
        samples=grid.samples,
    )

    warnings: list[str] = []
    herm_notes = [e.warning for e in shifts if e.warning is not None]
    if herm_notes:
        warnings.append(
            f"elevated hermiticity defect on {len(herm_notes)} of {len(shifts)} samples; "
            f"worst: {herm_notes[0]}"
        )
    if epsilon >= ADIABATICITY_WARN:
        warnings.append(
            f"adiabaticity parameter {epsilon:.6g} >= {ADIABATICITY_WARN}; "
            "the instantaneous description is questionable for this cycle"
        )
    if config.beta is not None and instants and not instants[0].regime_ok:
        warnings.append(
            "entropy/noise regime check failed: need omega < 1/beta < 1/tau"
        )

    document = {
        "config": config.raw,
        "adiabaticity": epsilon,
        "instants": [_instant_entry(r, config.beta is not None) for r in instants],
        "cycle": {
            "charge": charge,
            "winding": None if winding is None else [int(w) for w in winding],
            "dissipated_per_cycle": dissipated,
            "adiabaticity": epsilon,
            "period": grid.period,
            "samples": grid.samples,
        },
        "optimality": _verdict_entry(verdict),
        "warnings": warnings,
        "versions": {
            "spec_version": SPEC_VERSION,
            "tolerances": {
                "tol_unitary": tol.tol_unitary,
                "tol_herm": tol.tol_herm,
                "tol_opt": tol.tol_opt,
                "tol_charge": tol.tol_charge,
            },
        },
    }
    csv_text = _csv_text(instants, ratios, model.n_channels, config.beta is not None)
    return AnalysisResult(
        document=document, csv_text=csv_text, instants=instants,
        cycle=cycle, verdict=verdict,
    )


def instant_document(config: ModelConfig, t: float) -> dict:
    """Single-time report for ``pump instant`` (t in [0, period))."""
    from .errors import ConfigError

    if not (0.0 <= t < config.period):
        raise ConfigError("t", f"must lie in [0, {config.period!r}), got {t!r}")
    model = build_model(config)
    grid = CycleGrid(config.period, config.samples)
    e = energy_shift_at(model, t, config.mu, grid, config.tolerances)
    tau = delay_scale(model, config.mu, grid)
    omega = 2.0 * np.pi / model.period
    report = instant_report(e, beta=config.beta, omega=omega, tau=tau)
    return _instant_entry(report, config.beta is not None)
