"""JSON encoding of complex arrays and Kraus tuple files.

Complex numbers are always written as ``[re, im]`` pairs.  Python's float
repr round-trips, so parse(serialize(B)) reproduces every entry bit for bit.
"""
import json
from typing import Optional

import numpy as np

from .errors import ParseError, ShapeError, ShapeMismatch
from .transfer import KrausTuple


def encode_complex(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def decode_complex(v, field: str = "value") -> complex:
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        raise ParseError(f"{field}: expected [re, im], got {v!r}")
    return complex(float(v[0]), float(v[1]))


def encode_array(a) -> list:
    """Nested lists with [re, im] leaves."""
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return encode_complex(a)
    return [encode_array(x) for x in a]


def decode_array(v, field: str = "array") -> np.ndarray:
    def rec(x, path):
        if isinstance(x, list) and len(x) == 2 and all(
                isinstance(y, (int, float)) and not isinstance(y, bool) for y in x):
            return complex(float(x[0]), float(x[1]))
        if not isinstance(x, list) or not x:
            raise ParseError(f"{path}: expected a non-empty list")
        return [rec(y, f"{path}[{i}]") for i, y in enumerate(x)]

    data = rec(v, field)
    try:
        return np.array(data, dtype=complex)
    except ValueError as exc:
        raise ShapeError(f"{field}: ragged nesting") from exc


def tuple_to_dict(B: KrausTuple, seed: Optional[int] = None) -> dict:
    d = {"n": B.n, "k": B.k, "matrices": encode_array(B.mats)}
    if B.name:
        d["name"] = B.name
    if seed is not None:
        d["seed"] = int(seed)
    return d


def tuple_from_dict(d) -> KrausTuple:
    if not isinstance(d, dict):
        raise ParseError("top level must be an object")
    for key in ("n", "k", "matrices"):
        if key not in d:
            raise ParseError(f"missing field '{key}'")
    n, k = d["n"], d["k"]
    if not isinstance(n, int) or not isinstance(k, int) or isinstance(n, bool) or isinstance(k, bool):
        raise ParseError("fields 'n' and 'k' must be integers")
    mats = d["matrices"]
    if not isinstance(mats, list) or not mats:
        raise ParseError("field 'matrices' must be a non-empty list")
    if len(mats) != n:
        raise ShapeError(f"n = {n} but {len(mats)} matrices given")
    arrs = []
    for i, M in enumerate(mats):
        A = decode_array(M, f"matrices[{i}]")
        if A.shape != (k, k):
            raise ShapeError(f"matrices[{i}] has shape {A.shape}, expected ({k}, {k})")
        arrs.append(A)
    name = d.get("name")
    try:
        return KrausTuple(np.stack(arrs), name=name)
    except ShapeMismatch as exc:
        raise ShapeError(str(exc)) from exc
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def parse_tuple_file(data) -> KrausTuple:
    """Parse tuple JSON given as bytes or str."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not UTF-8: {exc}") from exc
    try:
        d = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return tuple_from_dict(d)


def dumps(obj) -> str:
    """Canonical JSON text (sorted keys, fixed indentation, trailing newline)."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def serialize_tuple(B: KrausTuple, seed: Optional[int] = None) -> bytes:
    return dumps(tuple_to_dict(B, seed)).encode("utf-8")


def load_tuple(path) -> KrausTuple:
    with open(path, "rb") as fh:
        return parse_tuple_file(fh.read())
