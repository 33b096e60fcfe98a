"""JSON schemas for matrices, realizations, measures, reports and certificates.

Floating values are serialized as hex-float strings (``float.hex()``), which
round-trip bit-exactly; human-readable decimal mirrors are included alongside
as non-authoritative fields (ignored on load).  ``dumps`` emits sorted keys so
identical objects produce identical bytes.
"""

from __future__ import annotations

import json

import numpy as np

from .measures import Coupling, DiscreteMeasure, UpperSetCertificate
from .numlin import MatrixTuple, SymMatrix
from .pencil import PencilRealization
from .verify import HullCertificate, VerificationReport

VERSION = "0.1.0"

__all__ = [
    "VERSION",
    "dumps",
    "matrix_to_json",
    "matrix_from_json",
    "tuple_to_json",
    "tuple_from_json",
    "realization_to_json",
    "realization_from_json",
    "measure_to_json",
    "measure_from_json",
    "report_to_json",
    "report_from_json",
    "coupling_to_json",
    "coupling_from_json",
    "upper_certificate_to_json",
    "hull_certificate_to_json",
]


def _hex(x: float) -> str:
    return float(x).hex()


def _unhex(v) -> float:
    if isinstance(v, str):
        return float.fromhex(v)
    return float(v)


def _hex_vector(v) -> list:
    return [_hex(x) for x in np.asarray(v, dtype=float).reshape(-1)]


def _unhex_vector(v) -> np.ndarray:
    return np.array([_unhex(x) for x in v], dtype=float)


def _hex_rows(m: np.ndarray) -> list:
    return [[_hex(x) for x in row] for row in m]


def _unhex_rows(rows) -> np.ndarray:
    return np.array([[_unhex(x) for x in row] for row in rows], dtype=float)


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def matrix_to_json(m) -> dict:
    arr = np.asarray(m.entries if isinstance(m, SymMatrix) else m)
    if arr.ndim != 2:
        raise ValueError("matrix payload must be 2-d")
    out = {
        "rows": int(arr.shape[0]),
        "cols": int(arr.shape[1]),
        "re": _hex_rows(arr.real),
        "re_decimal": [[float(x) for x in row] for row in arr.real],
    }
    if np.iscomplexobj(arr):
        out["im"] = _hex_rows(arr.imag)
        out["im_decimal"] = [[float(x) for x in row] for row in arr.imag]
    return out


def matrix_from_json(d: dict) -> np.ndarray:
    re = _unhex_rows(d["re"])
    rows, cols = int(d["rows"]), int(d["cols"])
    if re.shape != (rows, cols):
        raise ValueError(f"matrix shape {re.shape} does not match header ({rows}, {cols})")
    if "im" in d:
        im = _unhex_rows(d["im"])
        if im.shape != re.shape:
            raise ValueError("imaginary part shape differs from the real part")
        return re + 1j * im
    return re


def tuple_to_json(x: MatrixTuple) -> dict:
    return {
        "k": x.k,
        "n": x.n,
        "items": [matrix_to_json(xi) for xi in x.items],
    }


def tuple_from_json(d: dict) -> list:
    """Point payload: either a tuple file or a bare matrix file (k = 1).

    Returns raw arrays; symmetry is validated by the consuming operation.
    """
    if "re" in d:
        return [matrix_from_json(d)]
    items = [matrix_from_json(item) for item in d["items"]]
    if "k" in d and int(d["k"]) != len(items):
        raise ValueError(f"header arity {d['k']} does not match {len(items)} items")
    return items


def realization_to_json(r: PencilRealization) -> dict:
    return {
        "k": r.k,
        "m": r.m,
        "e": _hex_vector(r.e),
        "e_decimal": [float(x) for x in r.e],
        "A0": matrix_to_json(r.a0),
        "A": [matrix_to_json(c) for c in r.coeffs],
    }


def realization_from_json(d: dict) -> PencilRealization:
    e = _unhex_vector(d["e"])
    a0 = SymMatrix(matrix_from_json(d["A0"]))
    coeffs = tuple(SymMatrix(matrix_from_json(c)) for c in d["A"])
    if int(d["m"]) != e.shape[0] or int(d["k"]) != len(coeffs):
        raise ValueError("realization header does not match its payload")
    return PencilRealization(e, a0, coeffs)


def measure_to_json(mu: DiscreteMeasure) -> dict:
    return {
        "n": mu.n,
        "atoms": [matrix_to_json(a) for a in mu.atoms],
        "weights": _hex_vector(mu.weights),
        "weights_decimal": [float(w) for w in mu.weights],
    }


def measure_from_json(d: dict) -> DiscreteMeasure:
    atoms = tuple(SymMatrix(matrix_from_json(a)) for a in d["atoms"])
    weights = _unhex_vector(d["weights"])
    if any(a.n != int(d["n"]) for a in atoms):
        raise ValueError("atom dimension does not match header")
    return DiscreteMeasure(atoms, weights)


def report_to_json(rep: VerificationReport) -> dict:
    return {
        "suite": rep.suite,
        "dims": list(rep.dims),
        "trials": rep.trials,
        "failures": rep.failures,
        "skipped": rep.skipped,
        "worst_violation": _hex(rep.worst_violation),
        "worst_violation_decimal": float(rep.worst_violation),
        "first_failure_seed": rep.first_failure_seed,
        "seed": rep.seed,
        "tol": _hex(rep.tol),
        "tol_decimal": float(rep.tol),
        "pass": rep.passed,
        "extras": {k: _hex(v) for k, v in sorted(rep.extras.items())},
        "extras_decimal": {k: float(v) for k, v in sorted(rep.extras.items())},
        "version": VERSION,
    }


def report_from_json(d: dict) -> VerificationReport:
    return VerificationReport(
        suite=d["suite"],
        dims=tuple(int(x) for x in d["dims"]),
        trials=int(d["trials"]),
        failures=int(d["failures"]),
        skipped=int(d["skipped"]),
        worst_violation=_unhex(d["worst_violation"]),
        first_failure_seed=d["first_failure_seed"],
        seed=int(d["seed"]),
        tol=_unhex(d["tol"]),
        passed=bool(d["pass"]),
        extras={k: _unhex(v) for k, v in d.get("extras", {}).items()},
    )


def coupling_to_json(c: Coupling) -> dict:
    return {
        "kind": "coupling",
        "gamma": matrix_to_json(c.gamma),
        "row_weights": _hex_vector(c.row_weights),
        "col_weights": _hex_vector(c.col_weights),
    }


def coupling_from_json(d: dict) -> Coupling:
    return Coupling(
        matrix_from_json(d["gamma"]),
        _unhex_vector(d["row_weights"]),
        _unhex_vector(d["col_weights"]),
    )


def upper_certificate_to_json(cert: UpperSetCertificate) -> dict:
    return {
        "kind": "violated-upper-set",
        "mu_indices": list(cert.mu_indices),
        "nu_indices": list(cert.nu_indices),
        "mu_mass": _hex(cert.mu_mass),
        "nu_mass": _hex(cert.nu_mass),
        "mu_mass_decimal": float(cert.mu_mass),
        "nu_mass_decimal": float(cert.nu_mass),
    }


def hull_certificate_to_json(cert: HullCertificate) -> dict:
    return {
        "kind": "hull-decomposition",
        "isometry": matrix_to_json(cert.isometry),
        "scalar_tuples": matrix_to_json(cert.scalar_tuples),
        "block_dims": list(cert.block_dims),
        "weights": _hex_vector(cert.weights),
        "base_level": _hex(cert.base_level),
        "base_level_decimal": float(cert.base_level),
    }
