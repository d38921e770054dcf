"""JSON spec parsing and JSON/CSV serialisation of results.

Chain spec::

    {"dim": 2, "flavor": "doubly_stochastic",
     "prefix": [], "cycle": [[[0.25, 0.75], [0.75, 0.25]]],
     "x0": [1, 0]}

Permutation chains use ``perm_prefix`` / ``perm_cycle`` holding 0-based maps
(``map[i]`` is the column of the 1 in row ``i``).  A document with only the
permutation fields describes the chain of those permutation matrices.
Collections use ``{"dim", "flavor", "matrices"}``.  Index sets serialise as
sorted 0-based index arrays.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .birkhoff import BirkhoffDecomp, PermComponent
from .chain import TOL_STOCH, Chain, Permutation, PermChain
from .errors import InputError
from .flow import FlowReport, RegularSeq
from .indexset import IndexSet
from .switching import Collection


def parse_json(text: str, source: str = "<input>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{source}: top level must be a JSON object")
    return doc


def read_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_json(text, str(path))


def _field(doc: dict, key: str, default: Any = ...) -> Any:
    if key in doc:
        return doc[key]
    if default is ...:
        raise InputError(f"missing field {key!r}")
    return default


def _matrices(raw, key: str, dim: int) -> list[np.ndarray]:
    if not isinstance(raw, list):
        raise InputError(f"{key!r} must be an array of matrices")
    out = []
    for n, item in enumerate(raw):
        try:
            a = np.array(item, dtype=float)
        except (TypeError, ValueError) as exc:
            raise InputError(f"{key}[{n}] is not a numeric matrix") from exc
        if a.shape != (dim, dim):
            raise InputError(f"{key}[{n}] has shape {a.shape}, expected ({dim}, {dim})")
        out.append(a)
    return out


def _dim(doc: dict) -> int:
    dim = _field(doc, "dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise InputError(f"'dim' must be a positive integer, got {dim!r}")
    return dim


def load_perm_chain(doc: dict) -> PermChain | None:
    if "perm_cycle" not in doc:
        return None
    dim = _dim(doc)
    try:
        pre = [Permutation(tuple(p)) for p in _field(doc, "perm_prefix", [])]
        cyc = [Permutation(tuple(p)) for p in _field(doc, "perm_cycle")]
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad permutation map: {exc}") from exc
    return PermChain(dim, tuple(pre), tuple(cyc))


def load_chain(doc: dict, tol_stoch: float = TOL_STOCH) -> Chain:
    dim = _dim(doc)
    flavor = _field(doc, "flavor", "stochastic")
    if "cycle" not in doc and "perm_cycle" in doc:
        return load_perm_chain(doc).as_chain().with_flavor(flavor)
    prefix = _matrices(_field(doc, "prefix", []), "prefix", dim)
    cycle = _matrices(_field(doc, "cycle"), "cycle", dim)
    return Chain(dim, tuple(prefix), tuple(cycle), flavor, tol_stoch)


def load_collection(doc: dict, tol_stoch: float = TOL_STOCH) -> Collection:
    dim = _dim(doc)
    mats = _matrices(_field(doc, "matrices"), "matrices", dim)
    return Collection(dim, tuple(mats), _field(doc, "flavor", "stochastic"), tol_stoch)


def load_regular_seq(doc: dict, dim: int) -> RegularSeq:
    def sets(key, default=...):
        return tuple(IndexSet.of(dim, s) for s in _field(doc, key, default))
    return RegularSeq(dim, sets("prefix", []), sets("cycle"))


def load_x0(doc: dict, dim: int) -> np.ndarray:
    x0 = np.array(_field(doc, "x0"), dtype=float)
    if x0.shape != (dim,):
        raise InputError(f"x0 has shape {x0.shape}, expected ({dim},)")
    return x0


# -- serialisation ------------------------------------------------------------

def jsonable(obj: Any) -> Any:
    """Convert results into plain JSON values (floats stay full precision)."""
    if isinstance(obj, IndexSet):
        return list(obj.members)
    if isinstance(obj, Permutation):
        return list(obj.map)
    if isinstance(obj, RegularSeq):
        return {"dim": obj.dim, "prefix": [list(s.members) for s in obj.prefix],
                "cycle": [list(s.members) for s in obj.cycle]}
    if isinstance(obj, Chain):
        return chain_spec(obj)
    if isinstance(obj, PermChain):
        return {"dim": obj.dim, "perm_prefix": [list(p.map) for p in obj.prefix],
                "perm_cycle": [list(p.map) for p in obj.cycle]}
    if isinstance(obj, FlowReport):
        return {"infinite": obj.infinite, "value": obj.value, "witness": jsonable(obj.witness)}
    if isinstance(obj, BirkhoffDecomp):
        return {"terms": [{"weight": t.weight, "perm": list(t.perm.map)} for t in obj.terms],
                "residual": obj.residual}
    if isinstance(obj, PermComponent):
        return {"gamma": obj.gamma, "degenerate": obj.degenerate,
                "permutation_component": jsonable(obj.pchain),
                "residual_chain": chain_spec(obj.residual_chain)}
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def chain_spec(chain: Chain) -> dict:
    return {
        "dim": chain.dim,
        "flavor": chain.flavor,
        "prefix": [a.tolist() for a in chain.prefix],
        "cycle": [a.tolist() for a in chain.cycle],
    }


def dumps(payload: Any) -> str:
    """Deterministic JSON text; ``repr`` floats round-trip 64-bit values exactly."""
    return json.dumps(jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()
