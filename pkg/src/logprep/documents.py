"""Structured text documents for every entity, schema "logprep/1".

One document holds one entity; terms are embedded as grammar strings and
rationals as exact "p/q" strings.  A tuple references its scale either
inline or by filename within the same workspace directory, so every
certificate stays independently checkable.  Encoding is deterministic
(sorted keys, fixed indentation); reports additionally carry a
"generated_at" stamp that byte-comparisons are expected to ignore.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Union

from .cells import Cell
from .grammar import ParseError, format_rational, parse_rational, parse_term, print_term
from .preparation import (
    Construction, ERPreparingTuple, ExpFamily, GsaPreparedForm, HeirMember,
    LAPreparingTuple, MemberRef, NiceWitness, UnitSpec,
)
from .report import Check, VerificationReport
from .scales import LogScale, THETA_ZERO
from .terms import SeriesDef, Term, VarContext

SCHEMA = "logprep/1"

Entity = Union[
    Cell, LogScale, GsaPreparedForm, LAPreparingTuple, ERPreparingTuple,
    ExpFamily, NiceWitness, VerificationReport,
]


class DecodeError(Exception):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _req(d: dict, key: str, path: str) -> Any:
    if key not in d:
        raise DecodeError(f"{path}.{key}", "missing field")
    return d[key]


def _rat(value: Any, path: str) -> Fraction:
    try:
        return parse_rational(str(value))
    except ParseError:
        raise DecodeError(path, f"not a rational literal: {value!r}")


def _term(text: Any, ctx: VarContext, path: str, series=None) -> Term:
    if not isinstance(text, str):
        raise DecodeError(path, "expected a term string")
    try:
        return parse_term(text, ctx, series)
    except ParseError as exc:
        raise DecodeError(path, f"term does not parse: {exc}")


# --- units -------------------------------------------------------------------


def _encode_unit(unit: UnitSpec) -> dict:
    return {
        "name": unit.name,
        "arity": unit.arity,
        "coeffs": [[list(exps), format_rational(c)] for exps, c in unit.coeffs],
        "tail": format_rational(unit.tail),
    }


def _decode_unit(d: Any, path: str) -> UnitSpec:
    if not isinstance(d, dict):
        raise DecodeError(path, "expected a unit object")
    coeffs = []
    for i, entry in enumerate(_req(d, "coeffs", path)):
        if not isinstance(entry, list) or len(entry) != 2:
            raise DecodeError(f"{path}.coeffs[{i}]", "expected [exponents, coeff]")
        exps, c = entry
        coeffs.append((tuple(int(e) for e in exps), _rat(c, f"{path}.coeffs[{i}]")))
    return UnitSpec(
        name=str(d.get("name", "unit")),
        arity=int(_req(d, "arity", path)),
        coeffs=tuple(coeffs),
        tail=_rat(d.get("tail", "0"), f"{path}.tail"),
    )


# --- per-kind encoders -------------------------------------------------------


def encode(entity: Entity) -> dict:
    if isinstance(entity, Cell):
        ctx = entity.ctx
        return {
            "schema": SCHEMA,
            "kind": "cell",
            "name": entity.name,
            "nvars": entity.nvars,
            "t_box": [
                [format_rational(lo), format_rational(hi)] for lo, hi in entity.t_box
            ],
            "lower": None if entity.lower is None else print_term(entity.lower, ctx),
            "upper": None if entity.upper is None else print_term(entity.upper, ctx),
            "nonzero_fiber": entity.nonzero_fiber,
        }
    if isinstance(entity, LogScale):
        ctx = entity.ctx
        eps: Optional[list] = None
        if entity.epsilon_witnesses is not None:
            eps = [
                e if e in (THETA_ZERO, None) else format_rational(Fraction(e))
                for e in entity.epsilon_witnesses
            ]
        return {
            "schema": SCHEMA,
            "kind": "scale",
            "name": entity.name,
            "nvars": entity.nvars,
            "r": entity.r,
            "center": [print_term(t, ctx) for t in entity.center],
            "signs": list(entity.sign_pattern),
            "epsilon": eps,
        }
    if isinstance(entity, GsaPreparedForm):
        ctx = entity.ctx
        return {
            "schema": SCHEMA,
            "kind": "gsa-form",
            "name": entity.name,
            "nvars": entity.nvars,
            "theta": print_term(entity.theta, ctx),
            "a": print_term(entity.a, ctx),
            "q": format_rational(entity.q),
            "unit": _encode_unit(entity.unit),
            "b": [print_term(t, ctx) for t in entity.b],
            "p": [format_rational(q) for q in entity.p],
            "side": entity.side,
        }
    if isinstance(entity, LAPreparingTuple):
        ctx = entity.ctx
        return {
            "schema": SCHEMA,
            "kind": "la-tuple",
            "name": entity.name,
            "nvars": entity.nvars,
            "r": entity.r,
            "scale": entity.scale_ref or encode(entity.scale),
            "a": print_term(entity.a, ctx),
            "q": [format_rational(q) for q in entity.q],
            "unit": _encode_unit(entity.unit),
            "b": [print_term(t, ctx) for t in entity.b],
            "P": [[format_rational(q) for q in row] for row in entity.P],
            "zero_column_prefix": entity.zero_column_prefix,
        }
    if isinstance(entity, ERPreparingTuple):
        return _encode_er(entity)
    if isinstance(entity, ExpFamily):
        ctx = entity.ctx
        return {
            "schema": SCHEMA,
            "kind": "family",
            "name": entity.name,
            "nvars": entity.nvars,
            "members": {
                name: print_term(t, ctx) for name, t in entity.members.items()
            },
            "witnesses": {
                name: {base: format_rational(c) for base, c in combo.items()}
                for name, combo in entity.witnesses.items()
            },
        }
    if isinstance(entity, NiceWitness):
        ctx = VarContext(entity.nvars)
        return {
            "schema": SCHEMA,
            "kind": "nice-witness",
            "name": entity.name,
            "nvars": entity.nvars,
            "tree": _encode_tree(entity.tree, ctx),
            "members": {
                name: {
                    "g": print_term(m.g, ctx),
                    "scale": encode(m.scale),
                    "level": m.level,
                }
                for name, m in entity.members.items()
            },
        }
    if isinstance(entity, VerificationReport):
        return {
            "schema": SCHEMA,
            "kind": "report",
            "verdict": entity.verdict,
            "checks": [
                {
                    "name": c.name,
                    "verdict": c.verdict,
                    "detail": c.detail,
                    "counterexample": _jsonable(c.counterexample),
                }
                for c in entity.checks
            ],
            "witnesses": _jsonable(entity.witnesses),
            "counterexamples": _jsonable(entity.counterexamples),
            "meta": _jsonable(entity.meta),
            "notes": list(entity.notes),
        }
    raise TypeError(f"cannot encode {type(entity).__name__}")


def _encode_er(t: ERPreparingTuple) -> dict:
    if t.is_zero:
        return {
            "schema": SCHEMA,
            "kind": "er-tuple",
            "name": t.name,
            "nvars": t.nvars,
            "level": -1,
        }
    ctx = t.ctx
    assert t.scale is not None and t.a is not None and t.unit is not None
    assert t.exp_c is not None
    return {
        "schema": SCHEMA,
        "kind": "er-tuple",
        "name": t.name,
        "nvars": t.nvars,
        "level": t.level,
        "r": t.r,
        "scale": encode(t.scale),
        "a": print_term(t.a, ctx),
        "q": [format_rational(q) for q in t.q],
        "unit": _encode_unit(t.unit),
        "b": [print_term(bt, ctx) for bt in t.b],
        "P": [[format_rational(q) for q in row] for row in t.P],
        "exp_c": {"member": t.exp_c[0], "tuple": _encode_er(t.exp_c[1])},
        "exp_d": [
            {"member": name, "tuple": _encode_er(sub)} for name, sub in t.exp_d
        ],
    }


def _encode_tree(node, ctx: VarContext) -> dict:
    if isinstance(node, MemberRef):
        return {"member": node.name}
    if isinstance(node, Construction):
        inner = VarContext(len(node.args) - 1)
        return {
            "combinator": print_term(node.combinator, inner),
            "args": [_encode_tree(a, ctx) for a in node.args],
        }
    return {"term": print_term(node, ctx)}


def _jsonable(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, Fraction):
        return format_rational(value)
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    return repr(value)


# --- per-kind decoders -------------------------------------------------------


def decode(doc: dict, workspace: Optional[Path] = None, path: str = "$") -> Entity:
    if not isinstance(doc, dict):
        raise DecodeError(path, "expected an object")
    schema = doc.get("schema")
    if schema != SCHEMA:
        raise DecodeError(f"{path}.schema", f"unsupported schema {schema!r}")
    kind = _req(doc, "kind", path)
    decoder = _DECODERS.get(kind)
    if decoder is None:
        raise DecodeError(f"{path}.kind", f"unknown kind {kind!r}")
    return decoder(doc, workspace, path)


def _decode_scale_ref(
    value: Any, workspace: Optional[Path], path: str
) -> LogScale:
    if isinstance(value, str):
        if workspace is None:
            raise DecodeError(path, "scale reference needs a workspace directory")
        target = workspace / value
        if not target.exists() and not value.endswith(".json"):
            target = workspace / f"{value}.json"
        if not target.exists():
            raise DecodeError(path, f"referenced scale {value!r} not found")
        entity = load(target)
        if not isinstance(entity, LogScale):
            raise DecodeError(path, f"referenced document {value!r} is not a scale")
        return entity
    scale = decode(value, workspace, path)
    if not isinstance(scale, LogScale):
        raise DecodeError(path, "embedded document is not a scale")
    return scale


def _decode_cell(doc: dict, workspace, path: str) -> Cell:
    nvars = int(_req(doc, "nvars", path))
    ctx = VarContext(nvars)
    box = []
    for i, pair in enumerate(_req(doc, "t_box", path)):
        if not isinstance(pair, list) or len(pair) != 2:
            raise DecodeError(f"{path}.t_box[{i}]", "expected [lo, hi]")
        box.append((_rat(pair[0], f"{path}.t_box[{i}][0]"), _rat(pair[1], f"{path}.t_box[{i}][1]")))
    lower = _req(doc, "lower", path)
    upper = _req(doc, "upper", path)
    if isinstance(lower, dict) or isinstance(upper, dict):
        raise DecodeError(f"{path}.lower", "graph-fiber cells are not supported")
    return Cell(
        name=str(_req(doc, "name", path)),
        nvars=nvars,
        t_box=tuple(box),
        lower=None if lower is None else _term(lower, ctx, f"{path}.lower"),
        upper=None if upper is None else _term(upper, ctx, f"{path}.upper"),
        nonzero_fiber=bool(doc.get("nonzero_fiber", False)),
    )


def _decode_scale(doc: dict, workspace, path: str) -> LogScale:
    nvars = int(_req(doc, "nvars", path))
    ctx = VarContext(nvars)
    center = tuple(
        _term(t, ctx, f"{path}.center[{i}]")
        for i, t in enumerate(_req(doc, "center", path))
    )
    eps_raw = doc.get("epsilon")
    eps = None
    if eps_raw is not None:
        eps = tuple(
            e if e in (THETA_ZERO, None) else _rat(e, f"{path}.epsilon[{i}]")
            for i, e in enumerate(eps_raw)
        )
    return LogScale(
        name=str(_req(doc, "name", path)),
        nvars=nvars,
        r=int(_req(doc, "r", path)),
        center=center,
        sign_pattern=tuple(_req(doc, "signs", path)),
        epsilon_witnesses=eps,
    )


def _decode_gsa(doc: dict, workspace, path: str) -> GsaPreparedForm:
    nvars = int(_req(doc, "nvars", path))
    ctx = VarContext(nvars)
    return GsaPreparedForm(
        name=str(_req(doc, "name", path)),
        nvars=nvars,
        theta=_term(_req(doc, "theta", path), ctx, f"{path}.theta"),
        a=_term(_req(doc, "a", path), ctx, f"{path}.a"),
        q=_rat(_req(doc, "q", path), f"{path}.q"),
        unit=_decode_unit(_req(doc, "unit", path), f"{path}.unit"),
        b=tuple(
            _term(t, ctx, f"{path}.b[{i}]") for i, t in enumerate(_req(doc, "b", path))
        ),
        p=tuple(_rat(q, f"{path}.p[{i}]") for i, q in enumerate(_req(doc, "p", path))),
        side=str(_req(doc, "side", path)),
    )


def _decode_la(doc: dict, workspace, path: str) -> LAPreparingTuple:
    nvars = int(_req(doc, "nvars", path))
    ctx = VarContext(nvars)
    prefix = doc.get("zero_column_prefix")
    scale_raw = _req(doc, "scale", path)
    return LAPreparingTuple(
        name=str(_req(doc, "name", path)),
        nvars=nvars,
        r=int(_req(doc, "r", path)),
        scale=_decode_scale_ref(scale_raw, workspace, f"{path}.scale"),
        scale_ref=scale_raw if isinstance(scale_raw, str) else None,
        a=_term(_req(doc, "a", path), ctx, f"{path}.a"),
        q=tuple(_rat(q, f"{path}.q[{i}]") for i, q in enumerate(_req(doc, "q", path))),
        unit=_decode_unit(_req(doc, "unit", path), f"{path}.unit"),
        b=tuple(
            _term(t, ctx, f"{path}.b[{i}]") for i, t in enumerate(_req(doc, "b", path))
        ),
        P=tuple(
            tuple(_rat(q, f"{path}.P[{i}][{j}]") for j, q in enumerate(row))
            for i, row in enumerate(_req(doc, "P", path))
        ),
        zero_column_prefix=None if prefix is None else int(prefix),
    )


def _decode_er(doc: dict, workspace, path: str) -> ERPreparingTuple:
    nvars = int(_req(doc, "nvars", path))
    ctx = VarContext(nvars)
    level = int(_req(doc, "level", path))
    name = str(_req(doc, "name", path))
    if level == -1:
        return ERPreparingTuple(name=name, nvars=nvars, level=-1)
    exp_c_doc = _req(doc, "exp_c", path)
    exp_c = (
        str(_req(exp_c_doc, "member", f"{path}.exp_c")),
        _decode_er(_req(exp_c_doc, "tuple", f"{path}.exp_c"), workspace, f"{path}.exp_c.tuple"),
    )
    exp_d = []
    for i, entry in enumerate(doc.get("exp_d", [])):
        exp_d.append(
            (
                str(_req(entry, "member", f"{path}.exp_d[{i}]")),
                _decode_er(
                    _req(entry, "tuple", f"{path}.exp_d[{i}]"),
                    workspace,
                    f"{path}.exp_d[{i}].tuple",
                ),
            )
        )
    return ERPreparingTuple(
        name=name,
        nvars=nvars,
        level=level,
        r=int(_req(doc, "r", path)),
        scale=_decode_scale_ref(_req(doc, "scale", path), workspace, f"{path}.scale"),
        a=_term(_req(doc, "a", path), ctx, f"{path}.a"),
        q=tuple(_rat(q, f"{path}.q[{i}]") for i, q in enumerate(_req(doc, "q", path))),
        unit=_decode_unit(_req(doc, "unit", path), f"{path}.unit"),
        b=tuple(
            _term(t, ctx, f"{path}.b[{i}]") for i, t in enumerate(doc.get("b", []))
        ),
        P=tuple(
            tuple(_rat(q, f"{path}.P[{i}][{j}]") for j, q in enumerate(row))
            for i, row in enumerate(doc.get("P", []))
        ),
        exp_c=exp_c,
        exp_d=tuple(exp_d),
    )


def _decode_family(doc: dict, workspace, path: str) -> ExpFamily:
    nvars = int(_req(doc, "nvars", path))
    ctx = VarContext(nvars)
    members = {
        str(name): _term(t, ctx, f"{path}.members.{name}")
        for name, t in _req(doc, "members", path).items()
    }
    witnesses = {}
    for name, combo in doc.get("witnesses", {}).items():
        witnesses[str(name)] = {
            str(base): _rat(c, f"{path}.witnesses.{name}.{base}")
            for base, c in combo.items()
        }
    return ExpFamily(
        name=str(_req(doc, "name", path)),
        nvars=nvars,
        members=members,
        witnesses=witnesses,
    )


def _decode_tree(node: Any, ctx: VarContext, path: str):
    if not isinstance(node, dict):
        raise DecodeError(path, "expected a tree node object")
    if "member" in node:
        return MemberRef(str(node["member"]))
    if "term" in node:
        return _term(node["term"], ctx, f"{path}.term")
    if "combinator" in node:
        args = tuple(
            _decode_tree(a, ctx, f"{path}.args[{i}]")
            for i, a in enumerate(_req(node, "args", path))
        )
        inner = VarContext(len(args) - 1)
        return Construction(
            combinator=_term(node["combinator"], inner, f"{path}.combinator"),
            args=args,
        )
    raise DecodeError(path, "tree node needs 'member', 'term' or 'combinator'")


def _decode_nice(doc: dict, workspace, path: str) -> NiceWitness:
    nvars = int(_req(doc, "nvars", path))
    ctx = VarContext(nvars)
    tree = _decode_tree(_req(doc, "tree", path), ctx, f"{path}.tree")
    if not isinstance(tree, Construction):
        raise DecodeError(f"{path}.tree", "top-level tree node must be a construction")
    members = {}
    for name, m in _req(doc, "members", path).items():
        members[str(name)] = HeirMember(
            g=_term(_req(m, "g", f"{path}.members.{name}"), ctx, f"{path}.members.{name}.g"),
            scale=_decode_scale_ref(
                _req(m, "scale", f"{path}.members.{name}"), workspace, f"{path}.members.{name}.scale"
            ),
            level=int(_req(m, "level", f"{path}.members.{name}")),
        )
    return NiceWitness(
        name=str(_req(doc, "name", path)), nvars=nvars, tree=tree, members=members
    )


def _decode_report(doc: dict, workspace, path: str) -> VerificationReport:
    rep = VerificationReport()
    rep.verdict = str(_req(doc, "verdict", path))
    for i, c in enumerate(doc.get("checks", [])):
        rep.checks.append(
            Check(
                name=str(_req(c, "name", f"{path}.checks[{i}]")),
                verdict=str(_req(c, "verdict", f"{path}.checks[{i}]")),
                detail=str(c.get("detail", "")),
                counterexample=(
                    tuple(c["counterexample"]) if c.get("counterexample") else None
                ),
            )
        )
    rep.witnesses = doc.get("witnesses", {})
    rep.counterexamples = [tuple(p) for p in doc.get("counterexamples", [])]
    rep.meta = doc.get("meta", {})
    rep.notes = list(doc.get("notes", []))
    return rep


_DECODERS = {
    "cell": _decode_cell,
    "scale": _decode_scale,
    "gsa-form": _decode_gsa,
    "la-tuple": _decode_la,
    "er-tuple": _decode_er,
    "family": _decode_family,
    "nice-witness": _decode_nice,
    "report": _decode_report,
}


# --- files -------------------------------------------------------------------


def dumps(entity: Entity, extra: Optional[dict] = None) -> str:
    doc = encode(entity)
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load(path: Union[str, Path]) -> Entity:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DecodeError(str(path), f"not valid JSON: {exc}")
    return decode(doc, workspace=path.parent)


def save(entity: Entity, path: Union[str, Path], extra: Optional[dict] = None) -> None:
    """Atomic write: the report file is either old or complete, never partial."""
    path = Path(path)
    data = dumps(entity, extra)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


_TVAR_RE = re.compile(r"\bt(\d+)\b")


def infer_nvars(text: str) -> int:
    return max((int(m.group(1)) for m in _TVAR_RE.finditer(text)), default=0)


def read_term_file(
    path: Union[str, Path], nvars: Optional[int] = None
) -> tuple[Term, VarContext]:
    """Read a plain-text term file; the context is inferred unless given."""
    text = Path(path).read_text().strip()
    n = infer_nvars(text) if nvars is None else nvars
    ctx = VarContext(n)
    return parse_term(text, ctx), ctx
