"""Quantum dynamics of few-mode and lattice bosons: exact, truncated Wigner, positive-P,
Gaussian entropy and coherent-state superposition engines, plus the scenario runner."""

import json
import os
from pathlib import Path

from ._qdyn import (
    CapacityError,
    InvalidInput,
    ScenarioInvalid,
    SingularMatrix,
    __version__,
    hilbert_dimension,
    kerr_single_mode_mean,
    renyi_entropy,
    run_double_well,
    run_variational,
    scenario_kinds,
)
from . import _qdyn

__all__ = [
    "CapacityError",
    "InvalidInput",
    "ScenarioInvalid",
    "SingularMatrix",
    "__version__",
    "hilbert_dimension",
    "kerr_single_mode_mean",
    "load_scenario",
    "parameter_hash",
    "parse_scenario",
    "renyi_entropy",
    "run_double_well",
    "run_scenario",
    "run_variational",
    "scenario_kinds",
]


def _text(scenario):
    if isinstance(scenario, dict):
        return json.dumps(scenario)
    return str(scenario)


def parse_scenario(scenario):
    """Validate a scenario (dict or JSON text) and return the canonical dict."""
    return json.loads(_qdyn.parse_scenario(_text(scenario)))


def load_scenario(path):
    return parse_scenario(Path(path).read_text())


def parameter_hash(scenario):
    return _qdyn.parameter_hash(_text(scenario))


def run_scenario(scenario, out_dir=None, seed=None, threads=None, deterministic=False):
    """Run a scenario and return exit code, written files, summary and manifest.

    `scenario` is a dict, JSON text or a path to a scenario file. The output directory
    defaults to $QDYN_OUT_DIR, then ./qdyn-out.
    """
    if isinstance(scenario, (str, os.PathLike)) and Path(scenario).suffix == ".json" and Path(scenario).is_file():
        scenario = Path(scenario).read_text()
    if out_dir is None:
        out_dir = os.environ.get("QDYN_OUT_DIR") or "qdyn-out"
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    r = _qdyn.run_scenario(_text(scenario), str(out_dir), seed, threads, deterministic)
    r["summary"] = json.loads(r["summary"])
    r["manifest"] = json.loads(r["manifest"])
    return r
