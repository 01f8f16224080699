"""JSON encoding of maps, certificates, witnesses and reports.

Complex scalars are ``[re, im]`` pairs and matrices are row-major nested
lists.  Floats go through ``repr`` so that ``parse(emit(x))`` is bit-exact.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone

import numpy as np

from . import cpmap as cm
from .certificates import DecompositionWitness, NestedStructure, PureSummand, Verdict
from .convexity import CombinationSpec
from .cpmap import AlgebraSpec, CpMap
from .dilation import CommutantElement, Dilation
from .errors import CpextError, ParseError
from .linalg import Tolerances


def plain(obj):
    """Recursively convert numpy scalars and tuples into JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(obj) -> str:
    return json.dumps(plain(obj), allow_nan=False)


def loads(text: str):
    def reject(token):
        raise ParseError(f"non-finite literal {token} is not allowed")

    try:
        return json.loads(text, parse_constant=reject)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc


def read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


# -- matrices -----------------------------------------------------------------

def matrix_to_json(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def matrix_from_json(obj, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    if not isinstance(obj, list):
        raise ParseError("matrix must be a list of rows")
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"ragged or non-numeric matrix: {exc}") from exc
    if arr.size == 0:
        arr = arr.reshape(len(obj), 0, 2) if arr.ndim < 3 else arr
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ParseError(f"matrix entries must be [re, im] pairs, got array shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParseError("matrix has non-finite entries")
    # assigning parts separately keeps the sign of -0.0
    M = np.empty(arr.shape[:2], dtype=complex)
    M.real = arr[..., 0]
    M.imag = arr[..., 1]
    if rows is not None and M.shape[0] != rows:
        raise ParseError(f"expected {rows} rows, got {M.shape[0]}")
    if cols is not None and M.shape[1] != cols:
        raise ParseError(f"expected {cols} columns, got {M.shape[1]}")
    return M


def _shaped(obj, rows: int, cols: int) -> np.ndarray:
    if rows == 0 or cols == 0:
        if obj not in ([], [[]] * rows):
            if not (isinstance(obj, list) and all(r == [] for r in obj)):
                raise ParseError("expected an empty matrix")
        return np.zeros((rows, cols), dtype=complex)
    return matrix_from_json(obj, rows, cols)


def _empty_aware(M) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"shape": list(M.shape), "data": matrix_to_json(M)}


def _from_empty_aware(obj) -> np.ndarray:
    try:
        rows, cols = (int(x) for x in obj["shape"])
        return _shaped(obj["data"], rows, cols)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad matrix record: {exc}") from exc


# -- maps ---------------------------------------------------------------------

def map_to_json(phi: CpMap) -> dict:
    return {
        "algebra": list(phi.algebra.blocks),
        "hdim": phi.hdim,
        "choi": [matrix_to_json(C) for C in phi.choi],
    }


def map_from_json(obj) -> CpMap:
    if not isinstance(obj, dict):
        raise ParseError("map file must be a JSON object")
    try:
        blocks = obj["algebra"]
        hdim = obj["hdim"]
        choi = obj["choi"]
    except KeyError as exc:
        raise ParseError(f"missing field {exc}") from exc
    if not (isinstance(blocks, list) and blocks and all(isinstance(n, int) and n >= 1 for n in blocks)):
        raise ParseError("algebra must be a non-empty list of positive integers")
    if not (isinstance(hdim, int) and hdim >= 0):
        raise ParseError("hdim must be a non-negative integer")
    if not isinstance(choi, list) or len(choi) != len(blocks):
        raise ParseError("choi must hold one matrix per algebra block")
    mats = [_shaped(C, n * hdim, n * hdim) for n, C in zip(blocks, choi)]
    try:
        return CpMap(AlgebraSpec(tuple(blocks)), hdim, tuple(mats))
    except CpextError as exc:
        raise ParseError(str(exc)) from exc


def read_map(path: str) -> CpMap:
    return map_from_json(read_json(path))


# -- certificates -------------------------------------------------------------

def structure_to_json(cert: NestedStructure) -> dict:
    groups = []
    for block, group in cert.groups:
        groups.append({
            "block": block,
            "summands": [
                {
                    "basis": _empty_aware(s.basis),
                    "kraus": _empty_aware(s.kraus),
                    "range": _empty_aware(s.range),
                    "map": map_to_json(s.map),
                }
                for s in group
            ],
        })
    return {
        "model": cert.model,
        "groups": groups,
        "conjugator": _empty_aware(cert.conjugator),
        "kernel": _empty_aware(cert.kernel),
    }


def structure_from_json(obj) -> NestedStructure:
    try:
        groups = []
        for g in obj["groups"]:
            block = int(g["block"])
            summands = [
                PureSummand(
                    block,
                    _from_empty_aware(s["basis"]),
                    _from_empty_aware(s["kraus"]),
                    _from_empty_aware(s["range"]),
                    map_from_json(s["map"]),
                )
                for s in g["summands"]
            ]
            groups.append((block, summands))
        return NestedStructure(groups, _from_empty_aware(obj["conjugator"]),
                               _from_empty_aware(obj["kernel"]), obj.get("model", "ucp"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad certificate: {exc}") from exc


def witness_to_json(wit: DecompositionWitness) -> dict:
    return {
        "model": wit.model,
        "weight": _empty_aware(wit.weight),
        "terms": [{"T": _empty_aware(T), "map": map_to_json(phi)} for T, phi in wit.terms],
        "nonequiv_index": wit.nonequiv_index,
        "equivalence": wit.equivalence,
        "evidence": plain(wit.evidence),
    }


def witness_from_json(obj) -> DecompositionWitness:
    try:
        terms = [(_from_empty_aware(t["T"]), map_from_json(t["map"])) for t in obj["terms"]]
        return DecompositionWitness(
            _from_empty_aware(obj["weight"]),
            terms,
            int(obj["nonequiv_index"]),
            str(obj["equivalence"]),
            dict(obj["evidence"]),
            obj.get("model", "ucp"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad witness: {exc}") from exc


def verdict_to_json(v: Verdict) -> dict:
    return {
        "verdict": v.kind,
        "certificate": structure_to_json(v.certificate) if v.certificate is not None else None,
        "witness": witness_to_json(v.witness) if v.witness is not None else None,
        "diagnostics": plain(v.diagnostics),
    }


def verdict_from_json(obj) -> Verdict:
    if not isinstance(obj, dict) or "verdict" not in obj:
        raise ParseError("report has no verdict")
    cert = obj.get("certificate")
    wit = obj.get("witness")
    return Verdict(
        obj["verdict"],
        structure_from_json(cert) if cert else None,
        witness_from_json(wit) if wit else None,
        obj.get("diagnostics", {}),
    )


def report(command: str, payload: dict, tol: Tolerances, seed=None, extra: dict | None = None) -> dict:
    """Assemble a report; ``timestamp`` is the only non-deterministic field."""
    out = {"command": command}
    out.update(payload)
    diagnostics = dict(out.get("diagnostics") or {})
    diagnostics["tolerances"] = tol.as_dict()
    diagnostics["seed"] = seed
    if extra:
        diagnostics.update(extra)
    out["diagnostics"] = plain(diagnostics)
    out["timestamp"] = datetime.now(timezone.utc).isoformat()
    return out


def strip_timestamp(obj: dict) -> dict:
    return {k: v for k, v in obj.items() if k != "timestamp"}


# -- other domain objects -----------------------------------------------------

def dilation_to_json(dil: Dilation) -> dict:
    return {
        "algebra": list(dil.algebra.blocks),
        "hdim": dil.hdim,
        "mult": list(dil.mult),
        "kdim": dil.kdim,
        "V": _empty_aware(dil.V),
        "kraus": [[_empty_aware(K) for K in ops] for ops in dil.kraus],
    }


def dilation_from_json(obj) -> Dilation:
    try:
        alg = AlgebraSpec(tuple(obj["algebra"]))
        kraus = tuple(tuple(_from_empty_aware(K) for K in ops) for ops in obj["kraus"])
        return Dilation(alg, int(obj["hdim"]), tuple(int(r) for r in obj["mult"]),
                        _from_empty_aware(obj["V"]), kraus)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad dilation: {exc}") from exc


def commutant_to_json(D: CommutantElement) -> dict:
    return {"blocks": [_empty_aware(M) for M in D.blocks]}


def commutant_from_json(obj) -> CommutantElement:
    try:
        return CommutantElement(tuple(_from_empty_aware(M) for M in obj["blocks"]))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad commutant element: {exc}") from exc


def combination_to_json(spec: CombinationSpec) -> dict:
    return {
        "P": _empty_aware(spec.P),
        "terms": [{"T": _empty_aware(T), "map": map_to_json(phi)} for T, phi in spec.terms],
    }


def combination_from_json(obj) -> CombinationSpec:
    try:
        terms = [(_from_empty_aware(t["T"]), map_from_json(t["map"])) for t in obj["terms"]]
        return CombinationSpec(_from_empty_aware(obj["P"]), terms)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad combination: {exc}") from exc


def maps_identical(a: CpMap, b: CpMap) -> bool:
    """Bit-exact equality of two maps."""
    return (
        a.algebra == b.algebra
        and a.hdim == b.hdim
        and all(np.array_equal(x, y) for x, y in zip(a.choi, b.choi))
    )


def zero_map_like(phi: CpMap) -> CpMap:
    return cm.zero_map(phi.algebra, phi.hdim)
