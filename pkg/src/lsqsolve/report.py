"""Run reports: a single JSON document per solve, replayable from its seeds.

Scalars are written as JSON numbers, complex values as ``[re, im]`` pairs,
arrays as lists.  Keys are sorted and floats serialized with ``repr``
round-trip fidelity, so two runs with equal seeds produce byte-identical
documents; wall-clock timings are the one volatile section and can be
omitted for canonical output.
"""

import json

import numpy as np

from .solver import SolutionHandle


def _jsonable(obj):
    """Recursively convert numpy scalars/arrays and complex values."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        c = complex(obj)
        return [c.real, c.imag]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def handle_payload(handle: SolutionHandle) -> dict:
    """Serializable description of a solution handle, sufficient for replay."""
    return {
        "row_indices": handle.sketch.row_indices,
        "scale_factors": handle.sketch.scale_factors,
        "frob": handle.sketch.frob,
        "sigmas": handle.spectrum.sigmas,
        "detected_rank": handle.spectrum.detected_rank,
        "sigma_floor": handle.spectrum.sigma_floor,
        "lambdas": handle.lambdas,
        "w": handle.w,
        "w_norm": handle.w_norm,
        "b_norm": handle.b_norm,
        "seed": handle.seed,
        "rejection_cap": handle.rejection_cap,
    }


def build_report(*, instance: dict, config: dict, plan: dict,
                 handle: SolutionHandle, timings_ms: dict | None,
                 samples: dict | None = None, entries: dict | None = None,
                 verification: dict | None = None,
                 diagnostics: dict | None = None) -> dict:
    report = {
        "format": "lsqsolve-run/1",
        "instance": instance,
        "config": config,
        "plan": plan,
        "solution": handle_payload(handle),
    }
    if diagnostics is not None:
        report["diagnostics"] = diagnostics
    if entries is not None:
        report["entries"] = entries
    if samples is not None:
        report["samples"] = samples
    if verification is not None:
        report["verification"] = verification
    if timings_ms is not None:
        report["timings_ms"] = timings_ms
    return report


def dump_report(report: dict) -> str:
    """Canonical JSON text of a report (sorted keys, trailing newline)."""
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


def write_report(path, report: dict) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dump_report(report))


def load_report(path) -> dict:
    with open(path, "r", encoding="ascii") as fh:
        return json.load(fh)
