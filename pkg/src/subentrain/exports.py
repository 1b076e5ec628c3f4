"""Deterministic CSV/JSON artifact writers and run manifests.

Numeric CSV cells carry 17 significant digits so round-trips are
bit-stable; absent values are empty cells.  JSON is written with sorted
keys and no timestamps, so reruns on identical inputs are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fourier import FourierSeries, sample_grid
from .phase import PhaseModel
from .synthesis import Waveform

TOOL_VERSION = "0.1.0"


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if np.isnan(x):
        return ""
    return format(x, ".17g")


def write_csv(path, header, columns) -> None:
    """Write parallel columns under a comma-separated header line."""
    cols = [np.asarray(c) for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def sha256_obj(obj) -> str:
    payload = json.dumps(_plain(obj), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()


def save_fourier_csv(path, series: FourierSeries, n: int = 1024,
                     header=("theta", "value")) -> None:
    grid = sample_grid(n)
    write_csv(path, header, [grid, series.eval(grid)])


def save_phase_model(path, model: PhaseModel) -> None:
    write_json(path, model.to_dict())


def load_phase_model(path) -> PhaseModel:
    return PhaseModel.from_dict(read_json(path))


def save_prc_csv(path, model: PhaseModel, n: int = 1024) -> None:
    save_fourier_csv(path, model.Z, n, header=("theta", "Z"))


def save_limit_cycle_csv(path, cycle, state_names=None) -> None:
    n_dim = cycle.samples.shape[1]
    if state_names is None:
        state_names = ["V", "m", "h", "n"] if n_dim == 4 else [f"x{i+1}" for i in range(n_dim)]
    theta = sample_grid(cycle.resolution)
    write_csv(path, ["theta", *state_names],
              [theta, *[cycle.samples[:, j] for j in range(n_dim)]])


def save_waveform(path, waveform: Waveform) -> None:
    write_json(path, waveform.to_dict())


def load_waveform(path) -> Waveform:
    return Waveform.from_dict(read_json(path))


def save_waveform_csv(path, waveform: Waveform, n: int = 1024) -> None:
    save_fourier_csv(path, waveform.series, n, header=("eta", "v"))


def save_interaction(csv_path, meta_path, lam, n: int = 1024) -> None:
    grid = sample_grid(n)
    write_csv(csv_path, ["phi", "lambda"], [grid, lam.series.eval(grid)])
    write_json(meta_path, {
        "phi_plus": lam.phi_plus,
        "phi_minus": lam.phi_minus,
        "lambda_max": lam.lambda_max,
        "lambda_min": lam.lambda_min,
        "ratio": [lam.ratio.N, lam.ratio.M],
    })


def save_tongue(csv_path, meta_path, tongue) -> None:
    write_csv(csv_path, ["abscissa", "p_left", "p_right"],
              [tongue.abscissas, tongue.p_left, tongue.p_right])
    write_json(meta_path, {
        "axis": tongue.axis,
        "case": tongue.case,
        "ratio": [tongue.ratio.N, tongue.ratio.M],
        "label": tongue.label,
        "waveform_digest": tongue.waveform_digest,
    })


def save_sweep_csv(path, abscissas, p_theory, p_phase, p_state) -> None:
    nan = np.full(len(abscissas), np.nan)
    write_csv(path, ["abscissa", "p_min_theory", "p_min_phase", "p_min_state"],
              [abscissas,
               nan if p_theory is None else p_theory,
               nan if p_phase is None else p_phase,
               nan if p_state is None else p_state])


def save_rate(path, estimate, theory: float | None = None) -> None:
    doc = estimate.to_dict()
    if theory is not None:
        doc["theory"] = theory
    write_json(path, doc)


@dataclass
class RunManifest:
    """What a CLI command consumed and produced; digests are stable across reruns."""

    command: str
    parameters: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    version: str = TOOL_VERSION

    def add_input(self, path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def add_output(self, path) -> None:
        self.outputs.append(str(path))

    def write(self, path) -> None:
        write_json(path, {
            "command": self.command,
            "version": self.version,
            "parameters": self.parameters,
            "inputs": self.inputs,
            "outputs": sorted(self.outputs),
            "warnings": self.warnings,
        })
