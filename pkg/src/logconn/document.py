"""JSON document format for rings, objects and jobs.

Matrix entries are [row, col, terms]; a term is [exponents, num, den] with
an optional fourth u-degree. Linear data entries are [row, col, num, den].
"""
from dataclasses import dataclass, field
import json

from gmpy2 import mpq

from . import linalg as la
from .connection import Connection, Family, LinearData
from .errors import DocumentError, LogConnError
from .homological import HorizontalMorphism
from .series import Derivation, RingSpec, SeriesMatrix, basis_derivations

REFERENCE_ARGS = ("connection", "linear_data", "morphism", "source", "target")


@dataclass
class Document:
    ring: RingSpec
    objects: dict = field(default_factory=dict)
    jobs: list = field(default_factory=list)
    refs: dict = field(default_factory=dict)


def _loc(text, token):
    """Line and column of the first occurrence of token, if any."""
    if text is None:
        return None, None
    pos = text.find(token)
    if pos < 0:
        return None, None
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _need(cond, message, path):
    if not cond:
        raise DocumentError(message, path=path)


def _int(v, path):
    _need(isinstance(v, int) and not isinstance(v, bool), f"expected an integer, got {v!r}", path)
    return v


def _rational(num, den, path):
    _int(num, path)
    _int(den, path)
    _need(den != 0, "zero denominator", path)
    return mpq(num, den)


def parse_ring(block, trunc=None, u_trunc=None):
    _need(isinstance(block, dict), "ring block must be an object", "ring")
    for key in ("n", "r", "trunc"):
        _need(key in block, f"ring block lacks {key!r}", "ring")
    unknown = set(block) - {"n", "r", "trunc", "u_trunc", "weights"}
    _need(not unknown, f"unknown ring fields {sorted(unknown)}", "ring")
    try:
        return RingSpec(_int(block["n"], "ring.n"), _int(block["r"], "ring.r"),
                        trunc if trunc is not None else _int(block["trunc"], "ring.trunc"),
                        block.get("weights"),
                        u_trunc if u_trunc is not None else block.get("u_trunc"))
    except LogConnError as exc:
        raise DocumentError(str(exc), path="ring") from None


def parse_matrix(data, ring, shape, path, lenient=False):
    """Sparse series matrix; `lenient` drops terms above the truncation."""
    _need(isinstance(data, list), "matrix must be a list of entries", path)
    blocks = {}
    for e, entry in enumerate(data):
        p = f"{path}[{e}]"
        _need(isinstance(entry, list) and len(entry) == 3, "entry must be [row, col, terms]", p)
        i, j, terms = entry
        _int(i, p)
        _int(j, p)
        _need(0 <= i < shape[0] and 0 <= j < shape[1], f"entry ({i}, {j}) out of range", p)
        _need(isinstance(terms, list), "terms must be a list", p)
        for t, term in enumerate(terms):
            tp = f"{p}.terms[{t}]"
            _need(isinstance(term, list) and len(term) in (3, 4), "term must be [exponents, num, den(, u)]", tp)
            exps = term[0]
            _need(isinstance(exps, list) and len(exps) == ring.n, f"exponents must have length {ring.n}", tp)
            key = tuple(_int(x, tp) for x in exps)
            if len(term) == 4:
                _need(ring.has_u, "u-degree given but the ring has no u", tp)
                key = key + (_int(term[3], tp),)
            elif ring.has_u:
                key = key + (0,)
            c = _rational(term[1], term[2], tp)
            _need(min(key) >= 0, f"negative exponent in {list(key)}", tp)
            _need(min(key[:ring.r]) == 0,
                  f"inadmissible monomial {list(exps)}: x1...x{ring.r} vanishes in the ring", tp)
            if not ring.admits(key):
                if lenient:
                    continue
                raise DocumentError(f"monomial {list(key)} exceeds the truncation", path=tp)
            if key not in blocks:
                blocks[key] = la.zeros(*shape)
            blocks[key][i, j] += c
    return SeriesMatrix(ring, shape, blocks)


def parse_linear_data(obj, path):
    dim = _int(obj.get("dim"), f"{path}.dim")
    mats = []
    for m, data in enumerate(obj.get("nilpotents", [])):
        p = f"{path}.nilpotents[{m}]"
        mat = la.zeros(dim)
        _need(isinstance(data, list), "matrix must be a list of entries", p)
        for e, entry in enumerate(data):
            _need(isinstance(entry, list) and len(entry) == 4, "entry must be [row, col, num, den]", f"{p}[{e}]")
            i, j = _int(entry[0], p), _int(entry[1], p)
            _need(0 <= i < dim and 0 <= j < dim, "entry out of range", f"{p}[{e}]")
            mat[i, j] = _rational(entry[2], entry[3], p)
        mats.append(mat)
    try:
        return LinearData(dim, tuple(mats))
    except LogConnError as exc:
        raise DocumentError(str(exc), path=path) from None


def parse_connection(obj, ring, path, lenient=False):
    try:
        family = Family(obj.get("family", "relative"))
    except ValueError:
        raise DocumentError(f"unknown family {obj.get('family')!r}", path=f"{path}.family") from None
    if ring.has_u and family is not Family.UEXTENDED:
        ring = ring.without_u()
    rank = _int(obj.get("rank"), f"{path}.rank")
    names = {d.name for d in basis_derivations(ring, family)}
    mats = {}
    for name, data in obj.get("matrices", {}).items():
        _need(name in names, f"{name!r} is not a {family.value} basis derivation", f"{path}.matrices")
        mats[Derivation.parse(name)] = parse_matrix(data, ring, (rank, rank), f"{path}.matrices.{name}", lenient)
    try:
        return Connection(ring, family, mats, rank=rank)
    except LogConnError as exc:
        raise DocumentError(str(exc), path=path) from None


def parse_document(text, trunc=None, u_trunc=None):
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"syntax error: {exc.msg}", exc.lineno, exc.colno) from None
    _need(isinstance(raw, dict), "document must be a JSON object", "")
    unknown = set(raw) - {"ring", "objects", "jobs"}
    _need(not unknown, f"unknown top-level fields {sorted(unknown)}", "")
    _need("ring" in raw, "document lacks a ring block", "")
    ring = parse_ring(raw["ring"], trunc, u_trunc)
    lenient = trunc is not None or u_trunc is not None
    doc = Document(ring)
    objects = raw.get("objects", {})
    _need(isinstance(objects, dict), "objects must be a mapping", "objects")
    pending = []
    for name, obj in objects.items():
        path = f"objects.{name}"
        _need(isinstance(obj, dict) and "type" in obj, "object needs a type", path)
        kind = obj["type"]
        if kind == "connection":
            doc.objects[name] = parse_connection(obj, ring, path, lenient)
        elif kind == "linear-data":
            doc.objects[name] = parse_linear_data(obj, path)
        elif kind == "morphism":
            pending.append((name, obj, path))
        else:
            raise DocumentError(f"unknown object type {kind!r}", path=path)
    for name, obj, path in pending:
        ends = []
        for role in ("source", "target"):
            ref = obj.get(role)
            if not isinstance(doc.objects.get(ref), Connection):
                line, col = _loc(text, f'"{ref}"') if ref is not None else (None, None)
                raise DocumentError(f"dangling reference {ref!r}", line, col, f"{path}.{role}")
            ends.append(doc.objects[ref])
        src, tgt = ends
        mat = parse_matrix(obj.get("matrix", []), src.ring, (tgt.rank, src.rank), f"{path}.matrix", lenient)
        try:
            doc.objects[name] = HorizontalMorphism(src, tgt, mat)
        except LogConnError as exc:
            raise DocumentError(str(exc), path=path) from None
        doc.refs[name] = (obj["source"], obj["target"])
    jobs = raw.get("jobs", [])
    _need(isinstance(jobs, list), "jobs must be a list", "jobs")
    for j, job in enumerate(jobs):
        path = f"jobs[{j}]"
        _need(isinstance(job, dict) and isinstance(job.get("command"), str), "job needs a command", path)
        args = job.get("args", {})
        _need(isinstance(args, dict), "args must be an object", path)
        for key in REFERENCE_ARGS:
            if key in args and args[key] not in doc.objects:
                line, col = _loc(text, f'"{args[key]}"')
                raise DocumentError(f"dangling reference {args[key]!r}", line, col, f"{path}.args.{key}")
        doc.jobs.append({"command": job["command"], "args": dict(args)})
    return doc


def rational_pair(v):
    v = mpq(v)
    return int(v.numerator), int(v.denominator)


def matrix_to_json(m):
    ring = m.ring
    entries = {}
    for key, blk in m.items():
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                v = blk[i, j]
                if v != 0:
                    num, den = rational_pair(v)
                    term = [list(key[:ring.n]), num, den]
                    if ring.has_u:
                        term.append(key[ring.n])
                    entries.setdefault((i, j), []).append(term)
    return [[i, j, terms] for (i, j), terms in sorted(entries.items())]


def series_to_json(s):
    ring = s.ring
    out = []
    for key, v in s.items():
        num, den = rational_pair(v)
        term = [list(key[:ring.n]), num, den]
        if ring.has_u:
            term.append(key[ring.n])
        out.append(term)
    return out


def constant_to_json(m):
    return la.to_pairs(m)


def connection_to_json(C):
    return {
        "type": "connection",
        "family": C.family.value,
        "rank": C.rank,
        "matrices": {d.name: matrix_to_json(m) for d, m in C.items() if not m.is_zero()},
    }


def linear_data_to_json(L):
    return {"type": "linear-data", "dim": L.dim, "nilpotents": [constant_to_json(m) for m in L.nilpotents]}


def serialize_document(doc):
    objects = {}
    for name, obj in doc.objects.items():
        if isinstance(obj, Connection):
            objects[name] = connection_to_json(obj)
        elif isinstance(obj, LinearData):
            objects[name] = linear_data_to_json(obj)
        else:
            src, tgt = doc.refs[name]
            objects[name] = {"type": "morphism", "source": src, "target": tgt, "matrix": matrix_to_json(obj.mat)}
    raw = {"ring": doc.ring.describe(), "objects": objects,
           "jobs": [{"command": j["command"], "args": j["args"]} for j in doc.jobs]}
    return dumps(raw)


def dumps(data):
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
