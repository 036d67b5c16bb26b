"""Prepared-form certificates and their sampling verifiers.

Three certificate shapes are covered: the order-0 form
a(t) |x - theta(t)|^q u(t,x), the scale-based form
a(t) |Y(t,x)|^(x)q u(t,x) over a logarithmic scale, and the recursive
exponential form that additionally carries exp factors drawn from a named
family of positive functions, with nested certificates for their
logarithms.  Units are positive convergent series evaluated at bounded
monomial arguments; positivity over the closed unit box is established by
interval evaluation with recursive subdivision.

Certificates are verified, never synthesized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from . import interval as ivm
from .cells import Cell, SamplePlan, sample, t_samples
from .interval import Interval
from .report import INCONCLUSIVE, REFUTED, VERIFIED, VerificationReport
from .scales import (
    LogScale, ScaleError, scale_values, verify_scale,
)
from .terms import (
    Exp, Log, SeriesDef, Term, Var, VarContext, children, depends_only_on_t,
    eval_term, free_vars, is_zero_term,
)

DEFAULT_TOL = 1e-9
NONVANISH_ATOL = 1e-12


class InvalidInputError(Exception):
    """Malformed certificate input (missing member, bad reference)."""


@dataclass(frozen=True)
class UnitSpec:
    """A positive power series v over s variables: coefficients plus tail."""

    name: str
    arity: int
    coeffs: tuple[tuple[tuple[int, ...], Fraction], ...]
    tail: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if self.arity < 0:
            raise InvalidInputError("unit arity must be nonnegative")
        for exps, _ in self.coeffs:
            if len(exps) != self.arity or any(e < 0 for e in exps):
                raise InvalidInputError(f"bad exponent tuple {exps} in unit {self.name}")
        if self.tail < 0:
            raise InvalidInputError("unit tail bound must be nonnegative")

    def value(self, phis: Sequence[float]) -> float:
        total = 0.0
        for exps, coeff in self.coeffs:
            mono = float(coeff)
            for v, e in zip(phis, exps):
                mono *= v**e
            total += mono
        return total

    def enclosure_on(self, box: Sequence[Interval]) -> Interval:
        total = ivm.ZERO
        for exps, coeff in self.coeffs:
            mono = ivm.point(float(coeff))
            for v, e in zip(box, exps):
                mono = ivm.mul(mono, ivm.ipow(v, e))
            total = ivm.add(total, mono)
        t = float(self.tail)
        return ivm.add(total, Interval(-t, t))

    def to_series_def(self, name: Optional[str] = None) -> SeriesDef:
        return SeriesDef(name or self.name, max(self.arity, 1), self.coeffs, self.tail)


@dataclass(frozen=True)
class UnitPositivity:
    status: str  # verified | refuted | inconclusive
    lo: float
    hi: float


def unit_positivity(unit: UnitSpec, max_depth: int = 6) -> UnitPositivity:
    """Branch-and-bound positivity of the unit over the closed unit box."""
    if unit.arity == 0:
        v = unit.value(())
        lo, hi = v - float(unit.tail), v + float(unit.tail)
        status = VERIFIED if lo > 0 else (REFUTED if hi <= 0 else INCONCLUSIVE)
        return UnitPositivity(status, lo, hi)
    queue: list[tuple[int, tuple[Interval, ...]]] = [
        (0, tuple(ivm.UNIT for _ in range(unit.arity)))
    ]
    glo, ghi = math.inf, -math.inf
    undecided = False
    while queue:
        depth, box = queue.pop()
        enc = unit.enclosure_on(box)
        if enc.hi <= 0.0:
            return UnitPositivity(REFUTED, enc.lo, enc.hi)
        if enc.lo > 0.0:
            glo, ghi = min(glo, enc.lo), max(ghi, enc.hi)
            continue
        if depth >= max_depth:
            undecided = True
            glo, ghi = min(glo, enc.lo), max(ghi, enc.hi)
            continue
        axis = depth % unit.arity
        mid = 0.5 * (box[axis].lo + box[axis].hi)
        left = box[:axis] + (Interval(box[axis].lo, mid),) + box[axis + 1 :]
        right = box[:axis] + (Interval(mid, box[axis].hi),) + box[axis + 1 :]
        queue.append((depth + 1, left))
        queue.append((depth + 1, right))
    return UnitPositivity(INCONCLUSIVE if undecided else VERIFIED, glo, ghi)


@dataclass(frozen=True)
class GsaPreparedForm:
    """Order-0 form a(t) |x - theta(t)|^q u(t,x), staying on one side of theta."""

    name: str
    nvars: int
    theta: Term
    a: Term
    q: Fraction
    unit: UnitSpec
    b: tuple[Term, ...]
    p: tuple[Fraction, ...]
    side: str  # above | below

    def __post_init__(self) -> None:
        if self.side not in ("above", "below"):
            raise InvalidInputError("side must be 'above' or 'below'")
        if len(self.b) != self.unit.arity or len(self.p) != self.unit.arity:
            raise InvalidInputError("base/exponent count must match unit arity")

    @property
    def ctx(self) -> VarContext:
        return VarContext(self.nvars)


@dataclass(frozen=True)
class LAPreparingTuple:
    name: str
    nvars: int
    r: int
    scale: LogScale
    a: Term
    q: tuple[Fraction, ...]
    unit: UnitSpec
    b: tuple[Term, ...]
    P: tuple[tuple[Fraction, ...], ...]
    zero_column_prefix: Optional[int] = None
    scale_ref: Optional[str] = None  # workspace filename the scale came from

    def __post_init__(self) -> None:
        if self.scale.r != self.r:
            raise InvalidInputError("scale depth must match the tuple's r")
        if len(self.q) != self.r + 1:
            raise InvalidInputError("q must have r+1 entries")
        if len(self.b) != self.unit.arity or len(self.P) != self.unit.arity:
            raise InvalidInputError("base/exponent rows must match unit arity")
        for row in self.P:
            if len(row) != self.r + 1:
                raise InvalidInputError("each exponent row must have r+1 entries")

    @property
    def ctx(self) -> VarContext:
        return VarContext(self.nvars)


@dataclass(frozen=True)
class ERPreparingTuple:
    """Recursive exponential certificate.

    level -1 marks the zero function; otherwise the product formula holds
    with exp factors named into a family and nested certificates (one
    level lower) for their logarithms.
    """

    name: str
    nvars: int
    level: int
    r: int = 0
    scale: Optional[LogScale] = None
    a: Optional[Term] = None
    q: tuple[Fraction, ...] = ()
    unit: Optional[UnitSpec] = None
    b: tuple[Term, ...] = ()
    P: tuple[tuple[Fraction, ...], ...] = ()
    exp_c: Optional[tuple[str, "ERPreparingTuple"]] = None
    exp_d: tuple[tuple[str, "ERPreparingTuple"], ...] = ()

    @property
    def is_zero(self) -> bool:
        return self.level == -1

    @property
    def ctx(self) -> VarContext:
        return VarContext(self.nvars)


@dataclass(frozen=True)
class ExpFamily:
    """Named positive functions; optional rational log-combination witnesses.

    A witness for member m maps base-member names to rational coefficients
    and claims log(m) equals that combination of base logs.
    """

    name: str
    nvars: int
    members: dict[str, Term]
    witnesses: dict[str, dict[str, Fraction]] = field(default_factory=dict)

    @property
    def ctx(self) -> VarContext:
        return VarContext(self.nvars)


# --- shared helpers ---------------------------------------------------------


def _rel_close(lhs: float, rhs: float, tol: float, slop: float = 0.0) -> bool:
    return abs(lhs - rhs) <= tol * (1.0 + abs(lhs)) + slop


def _check_nonvanishing(
    rep: VerificationReport,
    name: str,
    term: Term,
    points: Sequence[tuple[float, ...]],
    ctx: VarContext,
) -> bool:
    """Coefficient discipline: symbolically zero, or bounded away from 0."""
    if is_zero_term(term):
        rep.add(name, VERIFIED, "coefficient is the zero term")
        return True
    for p in points:
        v = eval_term(term, p, ctx).value
        if abs(v) <= NONVANISH_ATOL:
            rep.add(name, REFUTED, "coefficient vanishes at a sample", p)
            return False
    rep.add(name, VERIFIED, "coefficient bounded away from zero on samples")
    return True


def _check_unit(rep: VerificationReport, unit: UnitSpec, depth: int = 6) -> UnitPositivity:
    pos = unit_positivity(unit, depth)
    if pos.status == VERIFIED:
        rep.add("unit-positivity", VERIFIED, f"enclosure [{pos.lo:.6g}, {pos.hi:.6g}]")
    elif pos.status == REFUTED:
        rep.add("unit-positivity", REFUTED, "unit enclosure is nonpositive on a sub-box")
    else:
        rep.add(
            "unit-positivity",
            INCONCLUSIVE,
            f"positivity undecided at subdivision depth {depth}",
        )
    return pos


# --- verifiers --------------------------------------------------------------


def verify_gsa(
    form: GsaPreparedForm,
    f: Term,
    cell: Cell,
    plan: SamplePlan,
    tol: float = DEFAULT_TOL,
) -> VerificationReport:
    rep = VerificationReport()
    rep.meta.update(name=form.name, kind="gsa-form", seed=plan.seed, tol=tol)
    ctx = form.ctx
    points = sample(cell, plan)
    rep.meta["samples"] = len(points)

    pos = _check_unit(rep, form.unit)
    theta_zero = is_zero_term(form.theta)
    _check_nonvanishing(rep, "coefficient", form.a, points, ctx)

    eps_sup = 0.0
    for p in points:
        x = p[-1]
        theta_v = eval_term(form.theta, p, ctx).value
        if (form.side == "above" and not x > theta_v) or (
            form.side == "below" and not x < theta_v
        ):
            rep.add(
                "side",
                REFUTED,
                "sample is on the wrong side of the center; "
                "a finer decomposition is needed",
                p,
            )
            return rep
        if not theta_zero:
            if x == 0.0 or not abs(x - theta_v) < abs(x):
                rep.add("center-contraction", REFUTED, "|x - theta| >= |x|", p)
                return rep
            eps_sup = max(eps_sup, abs(x - theta_v) / abs(x))

        y0 = x - theta_v
        phis = []
        ok = True
        for j, (b_j, p_j) in enumerate(zip(form.b, form.p)):
            b_v = eval_term(b_j, p, ctx).value
            if y0 == 0.0:
                rep.add("factor", REFUTED, "x = theta(t) at a sample", p)
                return rep
            phi = b_v * math.pow(abs(y0), float(p_j))
            if not -1.0 <= phi <= 1.0:
                rep.add(
                    "phi-range",
                    REFUTED,
                    f"phi_{j + 1} = {phi:.6g} leaves [-1, 1]",
                    p,
                )
                ok = False
                break
            phis.append(phi)
        if not ok:
            return rep

        fr = eval_term(f, p, ctx)
        if fr.domain_flag:
            rep.add("domain", INCONCLUSIVE, "totalization fired evaluating f", p)
            continue
        a_v = eval_term(form.a, p, ctx).value
        rhs = a_v * math.pow(abs(y0), float(form.q)) * form.unit.value(phis)
        slop = abs(a_v * math.pow(abs(y0), float(form.q))) * float(form.unit.tail)
        if not _rel_close(fr.value, rhs, tol, slop):
            rep.add(
                "pointwise",
                REFUTED,
                f"f = {fr.value:.12g} but form gives {rhs:.12g}",
                p,
            )
            return rep

    if not theta_zero:
        rep.witnesses["epsilon_estimate"] = eps_sup * 1.05
    rep.witnesses["unit_enclosure"] = [pos.lo, pos.hi]
    if rep.verdict == VERIFIED:
        rep.add("pointwise", VERIFIED, f"product formula holds on {len(points)} samples")
    return rep


def _abs_pow_product(ys: Sequence[float], q: Sequence[Fraction]) -> float:
    out = 1.0
    for y, qj in zip(ys, q):
        if qj != 0:
            out *= math.pow(abs(y), float(qj))
    return out


def verify_la(
    tup: LAPreparingTuple,
    f: Term,
    cell: Cell,
    plan: SamplePlan,
    tol: float = DEFAULT_TOL,
    check_leading_term: bool = True,
) -> VerificationReport:
    rep = VerificationReport()
    rep.meta.update(name=tup.name, kind="la-tuple", seed=plan.seed, tol=tol)
    ctx = tup.ctx

    if tup.zero_column_prefix is not None:
        k = tup.zero_column_prefix
        for i, row in enumerate(tup.P):
            if any(row[j] != 0 for j in range(k)):
                rep.add(
                    "zero-column-prefix",
                    REFUTED,
                    f"P[{i}] has a nonzero entry in the first {k} columns",
                )
                return rep
        rep.add("zero-column-prefix", VERIFIED, f"first {k} columns vanish")

    scale_rep = verify_scale(tup.scale, cell, plan)
    rep.absorb("scale", scale_rep)
    if scale_rep.verdict == REFUTED:
        return rep

    points = sample(cell, plan)
    rep.meta["samples"] = len(points)
    pos = _check_unit(rep, tup.unit)
    _check_nonvanishing(rep, "coefficient", tup.a, points, ctx)
    if rep.verdict == REFUTED:
        return rep

    ratio_sup, ratio_inf = 0.0, math.inf
    for p in points:
        try:
            ys = scale_values(tup.scale, p).y
        except ScaleError:
            rep.add("recurrence", INCONCLUSIVE, "scale breakdown", p)
            continue
        phis = []
        ok = True
        for i, (b_i, row) in enumerate(zip(tup.b, tup.P)):
            phi = eval_term(b_i, p, ctx).value * _abs_pow_product(ys, row)
            if not -1.0 <= phi <= 1.0:
                rep.add(
                    "phi-range", REFUTED, f"phi_{i + 1} = {phi:.6g} leaves [-1, 1]", p
                )
                ok = False
                break
            phis.append(phi)
        if not ok:
            return rep
        fr = eval_term(f, p, ctx)
        if fr.domain_flag:
            rep.add("domain", INCONCLUSIVE, "totalization fired evaluating f", p)
            continue
        a_v = eval_term(tup.a, p, ctx).value
        lead = a_v * _abs_pow_product(ys, tup.q)
        rhs = lead * tup.unit.value(phis)
        if not _rel_close(fr.value, rhs, tol, abs(lead) * float(tup.unit.tail)):
            rep.add(
                "pointwise",
                REFUTED,
                f"f = {fr.value:.12g} but form gives {rhs:.12g}",
                p,
            )
            return rep
        if check_leading_term and lead != 0.0:
            ratio = fr.value / lead
            if ratio > 0:
                ratio_sup = max(ratio_sup, ratio)
                ratio_inf = min(ratio_inf, ratio)

    if rep.verdict == VERIFIED:
        rep.add("pointwise", VERIFIED, f"product formula holds on {len(points)} samples")
        if check_leading_term and pos.status == VERIFIED and ratio_sup > 0.0:
            delta_unit = max(pos.hi, 1.0 / pos.lo)
            if 1.0 / delta_unit <= ratio_inf and ratio_sup <= delta_unit:
                rep.add(
                    "leading-term",
                    VERIFIED,
                    f"f pinched by a|Y|^q with delta {delta_unit:.6g}",
                )
                rep.witnesses["delta_unit"] = delta_unit
            else:
                rep.add(
                    "leading-term",
                    REFUTED,
                    f"ratio range [{ratio_inf:.6g}, {ratio_sup:.6g}] escapes "
                    f"unit enclosure delta {delta_unit:.6g}",
                )
    return rep


def verify_la_simultaneous(
    tuples: Sequence[LAPreparingTuple],
    fs: Sequence[Term],
    cell: Cell,
    plan: SamplePlan,
    tol: float = DEFAULT_TOL,
) -> VerificationReport:
    """Simultaneous preparation: all tuples must share one center."""
    rep = VerificationReport()
    rep.meta.update(kind="la-simultaneous")
    if len(tuples) != len(fs) or not tuples:
        raise InvalidInputError("need matching, nonempty tuple/function lists")
    first = tuples[0].scale
    for t in tuples[1:]:
        if t.scale.r != first.r or t.scale.center != first.center:
            rep.add("shared-center", REFUTED, f"tuple {t.name} uses a different center")
            return rep
    rep.add("shared-center", VERIFIED, f"{len(tuples)} tuples share the center")
    for t, f in zip(tuples, fs):
        rep.absorb(t.name, verify_la(t, f, cell, plan, tol))
    return rep


def verify_er(
    tup: ERPreparingTuple,
    f: Term,
    cell: Cell,
    family: ExpFamily,
    plan: SamplePlan,
    tol: float = DEFAULT_TOL,
    base_family: Optional[ExpFamily] = None,
) -> VerificationReport:
    """Recursive check of an exponential certificate against f.

    Nested certificates are verified against the term log of their family
    member.  When the family carries rational log-combination witnesses,
    they are checked numerically against the base family (the family
    itself when no separate base is given).
    """
    rep = VerificationReport()
    rep.meta.update(name=tup.name, kind="er-tuple", level=tup.level, seed=plan.seed)
    points = sample(cell, plan)
    ctx = tup.ctx

    if tup.is_zero:
        for p in points:
            v = eval_term(f, p, ctx).value
            if abs(v) > tol:
                rep.add("zero-level", REFUTED, f"f = {v:.6g} is not zero", p)
                return rep
        rep.add("zero-level", VERIFIED, "f vanishes on all samples")
        return rep

    if tup.scale is None or tup.a is None or tup.unit is None or tup.exp_c is None:
        raise InvalidInputError(f"tuple {tup.name} at level {tup.level} is incomplete")
    c_name, c_tup = tup.exp_c
    nested = [(c_name, c_tup)] + list(tup.exp_d)
    for mname, sub in nested:
        if mname not in family.members:
            raise InvalidInputError(f"family member {mname!r} is missing")
        if sub.level != tup.level - 1:
            rep.add(
                "nesting-depth",
                REFUTED,
                f"nested tuple for {mname!r} has level {sub.level}, "
                f"expected {tup.level - 1}",
            )
            return rep

    for name, term in family.members.items():
        for p in points:
            if not eval_term(term, p, family.ctx).value > 0.0:
                rep.add("family-positivity", REFUTED, f"member {name!r} not positive", p)
                return rep
    rep.add("family-positivity", VERIFIED, f"{len(family.members)} members positive")

    scale_rep = verify_scale(tup.scale, cell, plan)
    rep.absorb("scale", scale_rep)
    _check_nonvanishing(rep, "coefficient", tup.a, points, ctx)
    _check_unit(rep, tup.unit)
    if rep.verdict == REFUTED:
        return rep

    c_term = family.members[c_name]
    d_terms = [family.members[nm] for nm, _ in tup.exp_d]
    for p in points:
        try:
            ys = scale_values(tup.scale, p).y
        except ScaleError:
            rep.add("recurrence", INCONCLUSIVE, "scale breakdown", p)
            continue
        phis = []
        ok = True
        for i, (b_i, row, d_term) in enumerate(zip(tup.b, tup.P, d_terms)):
            phi = (
                eval_term(b_i, p, ctx).value
                * _abs_pow_product(ys, row)
                * eval_term(d_term, p, ctx).value
            )
            if not -1.0 <= phi <= 1.0:
                rep.add("phi-range", REFUTED, f"phi_{i + 1} = {phi:.6g} leaves [-1, 1]", p)
                ok = False
                break
            phis.append(phi)
        if not ok:
            return rep
        lead = (
            eval_term(tup.a, p, ctx).value
            * _abs_pow_product(ys, tup.q)
            * eval_term(c_term, p, ctx).value
        )
        rhs = lead * tup.unit.value(phis)
        fv = eval_term(f, p, ctx).value
        if not _rel_close(fv, rhs, tol, abs(lead) * float(tup.unit.tail)):
            rep.add("pointwise", REFUTED, f"f = {fv:.12g} but form gives {rhs:.12g}", p)
            return rep
    rep.add("pointwise", VERIFIED, f"product formula holds on {len(points)} samples")

    for mname, sub in nested:
        member_log = Log(family.members[mname])
        sub_rep = verify_er(sub, member_log, cell, family, plan, tol, base_family)
        rep.absorb(f"nested:{mname}", sub_rep)
        if sub_rep.verdict == REFUTED:
            return rep

    base = base_family or family
    used = [c_name] + [nm for nm, _ in tup.exp_d]
    for mname in dict.fromkeys(used):
        witness = family.witnesses.get(mname)
        if witness is None:
            continue
        for bname in witness:
            if bname not in base.members:
                raise InvalidInputError(
                    f"witness for {mname!r} references missing base member {bname!r}"
                )
        for t in t_samples(points):
            p = t + (0.0,)
            lhs = eval_term(Log(family.members[mname]), p, family.ctx).value
            rhs = sum(
                float(coeff) * eval_term(Log(base.members[bname]), p, base.ctx).value
                for bname, coeff in witness.items()
            )
            if not _rel_close(lhs, rhs, tol):
                rep.add(
                    f"log-combination:{mname}",
                    REFUTED,
                    f"log member differs from its rational combination "
                    f"({lhs:.12g} vs {rhs:.12g})",
                    p,
                )
                return rep
        rep.add(
            f"log-combination:{mname}",
            VERIFIED,
            "log equals its declared rational combination of base logs",
        )
    return rep


def verify_heir(
    g: Term,
    cell: Cell,
    witness_scale: LogScale,
    level: int,
    plan: SamplePlan,
    tol: float = DEFAULT_TOL,
) -> VerificationReport:
    """g inherits from the scale: g = exp of the level-th center component."""
    rep = VerificationReport()
    rep.meta.update(kind="heir", level=level, seed=plan.seed)
    if not 1 <= level <= witness_scale.r:
        raise InvalidInputError("heir level must lie in 1..r")
    ctx = witness_scale.ctx
    if not depends_only_on_t(g, ctx):
        rep.add("parameter-only", REFUTED, "g depends on the last variable")
        return rep
    scale_rep = verify_scale(witness_scale, cell, plan)
    rep.absorb("witness-scale", scale_rep)
    if scale_rep.verdict == REFUTED:
        return rep
    target = Exp(witness_scale.center[level])
    for t in t_samples(sample(cell, plan)):
        p = t + (0.0,)
        gv = eval_term(g, p, ctx).value
        tv = eval_term(target, p, ctx).value
        if not _rel_close(gv, tv, tol):
            rep.add(
                "exp-of-center",
                REFUTED,
                f"g = {gv:.12g} but exp(center_{level}) = {tv:.12g}",
                p,
            )
            return rep
    rep.add("exp-of-center", VERIFIED, f"g matches exp(center_{level}) within {tol}")
    return rep


# --- construction witnesses (closure under composition) ----------------------


@dataclass(frozen=True)
class MemberRef:
    name: str


@dataclass(frozen=True)
class Construction:
    """A composition node: an exp-free combinator applied to arguments.

    Arguments are parameter-only terms, references to family members, or
    nested constructions; the combinator is a term over as many fresh
    variables as there are arguments.
    """

    combinator: Term
    args: tuple[Union[Term, MemberRef, "Construction"], ...]

    def __post_init__(self) -> None:
        if not self.args:
            raise InvalidInputError("a construction needs at least one argument")
        idx = free_vars(self.combinator)
        if idx and max(idx) >= len(self.args):
            raise InvalidInputError("combinator references a missing argument slot")


@dataclass(frozen=True)
class HeirMember:
    g: Term
    scale: LogScale
    level: int


@dataclass(frozen=True)
class NiceWitness:
    name: str
    nvars: int
    tree: Construction
    members: dict[str, HeirMember]


def _has_exp(term: Term) -> bool:
    if isinstance(term, Exp):
        return True
    return any(_has_exp(c) for c in children(term))


def _eval_construction(
    node: Union[Term, MemberRef, Construction],
    members: dict[str, HeirMember],
    point: tuple[float, ...],
    ctx: VarContext,
) -> float:
    if isinstance(node, MemberRef):
        if node.name not in members:
            raise InvalidInputError(f"construction references unknown member {node.name!r}")
        return eval_term(members[node.name].g, point, ctx).value
    if isinstance(node, Construction):
        vals = tuple(
            _eval_construction(arg, members, point, ctx) for arg in node.args
        )
        inner_ctx = VarContext(len(vals) - 1)
        return eval_term(node.combinator, vals, inner_ctx).value
    return eval_term(node, point, ctx).value


def _construction_combinators_exp_free(node) -> bool:
    if isinstance(node, Construction):
        if _has_exp(node.combinator):
            return False
        return all(
            _construction_combinators_exp_free(a)
            for a in node.args
            if isinstance(a, Construction)
        ) and all(
            not _has_exp(a) for a in node.args if not isinstance(a, (Construction, MemberRef))
        )
    return True


def verify_nice(
    g: Term,
    cell: Cell,
    witness: NiceWitness,
    plan: SamplePlan,
    tol: float = DEFAULT_TOL,
) -> VerificationReport:
    """g is built from heir members by exp-free combinators: replay the tree."""
    rep = VerificationReport()
    rep.meta.update(name=witness.name, kind="nice", seed=plan.seed)
    ctx = VarContext(witness.nvars)
    if not _construction_combinators_exp_free(witness.tree):
        raise InvalidInputError("construction combinators must be exp-free")
    for name, member in witness.members.items():
        heir_rep = verify_heir(member.g, cell, member.scale, member.level, plan, tol)
        rep.absorb(f"heir:{name}", heir_rep)
        if heir_rep.verdict == REFUTED:
            return rep
    for t in t_samples(sample(cell, plan)):
        p = t + (0.0,)
        built = _eval_construction(witness.tree, witness.members, p, ctx)
        gv = eval_term(g, p, ctx).value
        if not _rel_close(gv, built, tol):
            rep.add(
                "composition",
                REFUTED,
                f"tree evaluates to {built:.12g} but g = {gv:.12g}",
                p,
            )
            return rep
    rep.add("composition", VERIFIED, "construction tree reproduces g on samples")
    return rep
