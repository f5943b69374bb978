"""Matrix files and the polytope JSON format.

Matrices
--------
``.csv``  first line ``# rows,cols``, then one comma-separated row per line.
``.f64``  8-byte header (rows, cols as little-endian uint32) followed by the
          row-major little-endian float64 payload.

Polytopes
---------
JSON objects with ``"dim"`` and ``"kind"``::

    {"kind": "special", "name": "binf", "dim": 3}
    {"kind": "hform", "dim": 2, "A": [[1, 0], ...], "b": [1, ...]}
    {"kind": "vform", "dim": 2, "vertices": [[1, 1], [-1, 1], ...]}
    {"kind": "featurespec", "dim": 3, "constraints": [
        {"type": "box", "index": 0, "lo": -1, "hi": 1},
        {"type": "l1ball", "indices": [0, 1], "radius": 1},
        {"type": "simplexcap", "indices": [1, 2], "radius": 1}]}

``vertices`` lists one point per entry.  An optional ``"ellipsoid"`` entry
``{"C": [[...]], "g": [...]}`` carries a precomputed MVIE.
"""
from __future__ import annotations

import json
import os
import struct

import numpy as np

from .mvie import Ellipsoid
from .polytope import (Box, FeatureSpec, L1Ball, Polytope, SimplexCap, Special,
                       make_special, pex)


def write_matrix(path, X) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".f64":
        with open(path, "wb") as fh:
            fh.write(struct.pack("<II", *X.shape))
            fh.write(X.astype("<f8").tobytes(order="C"))
    elif ext == ".csv":
        with open(path, "w") as fh:
            fh.write(f"# {X.shape[0]},{X.shape[1]}\n")
            for row in X:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    else:
        raise ValueError(f"unsupported matrix extension {ext!r} (use .csv or .f64)")


def read_matrix(path) -> np.ndarray:
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".f64":
        with open(path, "rb") as fh:
            head = fh.read(8)
            if len(head) != 8:
                raise ValueError(f"{path}: truncated header")
            rows, cols = struct.unpack("<II", head)
            data = np.frombuffer(fh.read(), dtype="<f8")
        if data.size != rows * cols:
            raise ValueError(f"{path}: expected {rows * cols} values, found {data.size}")
        return data.reshape(rows, cols).astype(float)
    if ext == ".csv":
        shape = None
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    if shape is None and "," in line:
                        try:
                            shape = tuple(int(v) for v in line[1:].split(","))
                        except ValueError:
                            pass
                    continue
                rows.append([float(v) for v in line.split(",")])
        X = np.array(rows, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"{path}: ragged rows")
        if shape is not None and X.shape != shape:
            raise ValueError(f"{path}: header says {shape}, data is {X.shape}")
        return X
    raise ValueError(f"unsupported matrix extension {ext!r} (use .csv or .f64)")


# ---------------------------------------------------------------------------
# polytopes

def _constraint_from_dict(d):
    kind = d["type"].lower()
    if kind == "box":
        return Box(int(d["index"]), float(d["lo"]), float(d["hi"]))
    if kind == "l1ball":
        return L1Ball(tuple(d["indices"]), float(d["radius"]))
    if kind == "simplexcap":
        return SimplexCap(tuple(d["indices"]), float(d["radius"]))
    raise ValueError(f"unknown constraint type {d['type']!r}")


def _constraint_to_dict(c):
    if isinstance(c, Box):
        return {"type": "box", "index": c.index, "lo": c.lo, "hi": c.hi}
    if isinstance(c, L1Ball):
        return {"type": "l1ball", "indices": list(c.indices), "radius": c.radius}
    return {"type": "simplexcap", "indices": list(c.indices), "radius": c.radius}


def polytope_from_dict(d: dict) -> Polytope:
    kind = d.get("kind")
    dim = d.get("dim")
    if kind == "special":
        name = d["name"]
        if str(name).lower() == "pex":
            p = pex()
        else:
            if dim is None:
                raise ValueError("special polytope needs a dim")
            p = make_special(Special.parse(name), int(dim))
    elif kind == "hform":
        p = Polytope.from_halfspaces(d["A"], d["b"], name=d.get("name"))
    elif kind == "vform":
        p = Polytope.from_vertices(np.array(d["vertices"], dtype=float).T, name=d.get("name"))
    elif kind == "featurespec":
        spec = FeatureSpec(int(dim), tuple(_constraint_from_dict(c) for c in d["constraints"]))
        p = Polytope.from_featurespec(spec, name=d.get("name"))
    else:
        raise ValueError(f"unknown polytope kind {kind!r}")
    if dim is not None and p.dim != int(dim):
        raise ValueError(f"dim {dim} does not match the polytope data ({p.dim})")
    if "ellipsoid" in d:
        e = d["ellipsoid"]
        p.__dict__["_mvie"] = Ellipsoid(e["C"], e["g"])
    return p


def polytope_to_dict(p: Polytope, ellipsoid: Ellipsoid = None) -> dict:
    if p.name == "pex":
        d = {"kind": "special", "name": "pex", "dim": 3}
    elif p.special is not None:
        d = {"kind": "special", "name": p.special.value, "dim": p.dim}
    elif p.featurespec is not None:
        d = {"kind": "featurespec", "dim": p.dim,
             "constraints": [_constraint_to_dict(c) for c in p.featurespec.constraints]}
    elif p.kind == "hform":
        d = {"kind": "hform", "dim": p.dim, "A": p.halfspaces.A.tolist(),
             "b": p.halfspaces.b.tolist()}
    else:
        d = {"kind": "vform", "dim": p.dim, "vertices": p.vertices.T.tolist()}
    if ellipsoid is not None:
        d["ellipsoid"] = {"C": ellipsoid.C.tolist(), "g": ellipsoid.g.tolist()}
    return d


def load_polytope(source, dim: int = None) -> Polytope:
    """Resolve a polytope from a name (``binf``, ``b1plus``, ``pex``...), a JSON
    file path, or an already parsed dict."""
    if isinstance(source, Polytope):
        return source
    if isinstance(source, dict):
        return polytope_from_dict(source)
    text = str(source)
    if os.path.exists(text):
        with open(text) as fh:
            return polytope_from_dict(json.load(fh))
    if text.lower() == "pex":
        return pex()
    try:
        kind = Special.parse(text)
    except ValueError:
        raise ValueError(f"{text!r} is neither a polytope file nor a known polytope name") from None
    if dim is None:
        raise ValueError(f"polytope {text!r} needs a dimension")
    return make_special(kind, int(dim))


def save_polytope(path, p: Polytope, ellipsoid: Ellipsoid = None) -> None:
    with open(path, "w") as fh:
        json.dump(polytope_to_dict(p, ellipsoid), fh, indent=2)
