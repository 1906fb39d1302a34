"""Versioned JSON model files and CSV ingestion."""
from __future__ import annotations

import csv
import json
import math

import numpy as np

from .errors import DataValidationError, ModelFormatError, ModelVersionError
from .model import BmParams, CrbmParams, DbnStack, RbmParams, UnitFamily
from .dbn import Mlp

FORMAT_VERSION = 1


def _matrix(a):
    return [[float(x) for x in row] for row in np.asarray(a)]


def _vector(a):
    return [float(x) for x in np.asarray(a)]


def _rbm_doc(params: RbmParams) -> dict:
    return {
        "d": params.d,
        "p": params.p,
        "families": {"visible": params.visible_family.value, "hidden": params.hidden_family.value},
        "poisson_total": params.poisson_total,
        "W": _matrix(params.W),
        "b": _vector(params.b),
        "c": _vector(params.c),
    }


def to_document(obj, metadata=None) -> dict:
    if isinstance(obj, RbmParams):
        doc = {"model_kind": "rbm", **_rbm_doc(obj)}
    elif isinstance(obj, BmParams):
        doc = {"model_kind": "bm", **_rbm_doc(obj.base), "L": _matrix(obj.L), "J": _matrix(obj.J)}
    elif isinstance(obj, CrbmParams):
        doc = {"model_kind": "crbm", **_rbm_doc(obj.base), "T": obj.T,
               "G": [_matrix(g) for g in obj.G], "Q": [_matrix(q) for q in obj.Q]}
    elif isinstance(obj, DbnStack):
        doc = {"model_kind": "dbn", "layer_sizes": obj.layer_sizes,
               "layers": [_rbm_doc(r) for r in obj.layers]}
    elif isinstance(obj, Mlp):
        doc = {"model_kind": "mlp", "layer_sizes": obj.layer_sizes,
               "layers": [{"W": _matrix(w), "bias": _vector(b), "activation": a}
                          for w, b, a in zip(obj.weights, obj.biases, obj.activations)]}
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")
    doc = {"format_version": FORMAT_VERSION, **doc}
    if metadata:
        doc["metadata"] = metadata
    return doc


def save_model(obj, path, metadata=None):
    """Write ``obj`` as JSON; floats use shortest round-trip repr."""
    text = json.dumps(to_document(obj, metadata), allow_nan=False)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.write("\n")


def _get(doc, key, where):
    if not isinstance(doc, dict) or key not in doc:
        raise ModelFormatError(f"{where}{key}", "missing")
    return doc[key]


def _array(value, shape, name):
    try:
        arr = np.array(value, dtype=np.float64)
    except (TypeError, ValueError):
        raise ModelFormatError(name, "not a numeric array") from None
    if arr.shape != shape:
        raise ModelFormatError(name, f"shape {arr.shape} does not match declared {shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelFormatError(name, "contains non-finite values")
    return arr


def _int(value, name):
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ModelFormatError(name, f"expected a positive integer, got {value!r}")
    return value


def _rbm_from(doc, where="") -> RbmParams:
    d = _int(_get(doc, "d", where), f"{where}d")
    p = _int(_get(doc, "p", where), f"{where}p")
    fam = _get(doc, "families", where)
    try:
        vf = UnitFamily(_get(fam, "visible", f"{where}families."))
        hf = UnitFamily(_get(fam, "hidden", f"{where}families."))
    except ValueError as exc:
        raise ModelFormatError(f"{where}families", str(exc)) from None
    total = doc.get("poisson_total", 1.0)
    if not isinstance(total, (int, float)) or not math.isfinite(total) or total <= 0:
        raise ModelFormatError(f"{where}poisson_total", "expected a positive number")
    return RbmParams(
        _array(_get(doc, "W", where), (d, p), f"{where}W"),
        _array(_get(doc, "b", where), (d,), f"{where}b"),
        _array(_get(doc, "c", where), (p,), f"{where}c"),
        vf, hf, total,
    )


def from_document(doc):
    version = _get(doc, "format_version", "")
    if version != FORMAT_VERSION:
        raise ModelVersionError("format_version", f"unsupported version {version!r} (expected {FORMAT_VERSION})")
    kind = _get(doc, "model_kind", "")
    try:
        if kind == "rbm":
            return _rbm_from(doc)
        if kind == "bm":
            base = _rbm_from(doc)
            return BmParams(base, _array(_get(doc, "L", ""), (base.d, base.d), "L"),
                            _array(_get(doc, "J", ""), (base.p, base.p), "J"))
        if kind == "crbm":
            base = _rbm_from(doc)
            T = _int(_get(doc, "T", ""), "T")
            G, Q = _get(doc, "G", ""), _get(doc, "Q", "")
            if not isinstance(G, list) or len(G) != T:
                raise ModelFormatError("G", f"expected {T} matrices")
            if not isinstance(Q, list) or len(Q) != T:
                raise ModelFormatError("Q", f"expected {T} matrices")
            return CrbmParams(base, tuple(_array(g, (base.d, base.d), f"G[{i}]") for i, g in enumerate(G)),
                              tuple(_array(q, (base.d, base.p), f"Q[{i}]") for i, q in enumerate(Q)))
        if kind == "dbn":
            layers = _get(doc, "layers", "")
            if not isinstance(layers, list) or not layers:
                raise ModelFormatError("layers", "expected a non-empty list")
            return DbnStack(tuple(_rbm_from(r, f"layers[{i}].") for i, r in enumerate(layers)))
        if kind == "mlp":
            layers = _get(doc, "layers", "")
            if not isinstance(layers, list) or not layers:
                raise ModelFormatError("layers", "expected a non-empty list")
            weights, biases, acts = [], [], []
            for i, layer in enumerate(layers):
                W = np.array(_get(layer, "W", f"layers[{i}]."), dtype=np.float64)
                if W.ndim != 2:
                    raise ModelFormatError(f"layers[{i}].W", "expected a matrix")
                weights.append(_array(W, W.shape, f"layers[{i}].W"))
                biases.append(_array(_get(layer, "bias", f"layers[{i}]."), (W.shape[1],), f"layers[{i}].bias"))
                acts.append(_get(layer, "activation", f"layers[{i}]."))
            return Mlp(tuple(weights), tuple(biases), tuple(acts))
    except ModelFormatError:
        raise
    except (ValueError, TypeError) as exc:
        raise ModelFormatError(kind, str(exc)) from None
    raise ModelFormatError("model_kind", f"unknown kind {kind!r}")


def load_model(path, with_metadata=False):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError("document", f"invalid JSON ({exc})") from None
    obj = from_document(doc)
    if with_metadata:
        return obj, doc.get("metadata", {})
    return obj


# ---------------------------------------------------------------------------
# CSV


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_csv(path, sequence_ids=False):
    """Parse a numeric CSV with an optional header row.

    Returns ``(header, rows)``, or ``(header, ids, rows)`` when the first
    column holds sequence ids. Raises :class:`DataValidationError` naming
    the 1-based line of the first bad row.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [row for row in csv.reader(fh)]
    header = None
    start = 0
    while start < len(lines) and not any(cell.strip() for cell in lines[start]):
        start += 1
    if start < len(lines):
        first = [c.strip() for c in lines[start]]
        data_cells = first[1:] if sequence_ids else first
        if not all(_is_number(c) for c in data_cells):
            header = first
            start += 1
    width = None if header is None else len(header)
    ids, rows = [], []
    for lineno, raw in enumerate(lines[start:], start=start + 1):
        cells = [c.strip() for c in raw]
        if not any(cells):
            continue
        if width is None:
            width = len(cells)
        if len(cells) != width:
            raise DataValidationError(f"line {lineno}: expected {width} fields, got {len(cells)}")
        if sequence_ids:
            ids.append(cells[0])
            cells = cells[1:]
        try:
            values = [float(c) for c in cells]
        except ValueError:
            raise DataValidationError(f"line {lineno}: non-numeric value in {raw!r}") from None
        if not all(math.isfinite(x) for x in values):
            raise DataValidationError(f"line {lineno}: non-finite value")
        rows.append(values)
    ncols = (width - 1 if sequence_ids else width) if width is not None else 0
    arr = np.array(rows, dtype=np.float64).reshape(len(rows), ncols)
    if sequence_ids:
        return header, ids, arr
    return header, arr


def read_sequences(path):
    """Group rows of a ``seq_id,...`` CSV into sequences, in order of first appearance."""
    _, ids, rows = read_csv(path, sequence_ids=True)
    order, groups = [], {}
    for sid, row in zip(ids, rows):
        if sid not in groups:
            groups[sid] = []
            order.append(sid)
        groups[sid].append(row)
    return [np.array(groups[s]) for s in order]


def write_csv(path, rows, prefix="x"):
    rows = np.asarray(rows, dtype=np.float64)
    ncols = rows.shape[1] if rows.ndim == 2 else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"{prefix}{i}" for i in range(ncols)])
        for row in rows:
            writer.writerow([repr(float(x)) for x in row])
