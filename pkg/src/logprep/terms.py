"""Immutable expression trees for logarithmic-exponential terms.

Terms form a closed grammar over variables t_1..t_n and a distinguished
last variable x, with exact rational constants and exponents.  Evaluation
is totalized: 1/0 = 0, log of a nonpositive argument is 0, roots of
negatives are 0, and |0|^q = 0.  Every activation of one of these
conventions is counted so that verifiers can reject sample points where
the term left its natural domain.

The truncated variants `TruncLog` / `TruncExp` are the restricted
surrogates of log and exp: they agree with the real function on a compact
window ([1/lam, lam] resp. [-lam, lam]) and are 0 outside.  Their zero
branch is genuine semantics, not a convention, but activations are counted
separately because rewrite obligations require the live branch throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Optional, Union

from . import interval as iv
from .interval import Interval


class TermError(Exception):
    pass


class ArityError(TermError):
    pass


@dataclass(frozen=True)
class VarContext:
    """n parameter variables t_1..t_n plus the distinguished last variable x."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("variable count must be nonnegative")

    @property
    def arity(self) -> int:
        return self.n + 1

    @property
    def x_index(self) -> int:
        return self.n

    def var_name(self, index: int) -> str:
        if not 0 <= index <= self.n:
            raise ArityError(f"variable index {index} out of range for n={self.n}")
        return "x" if index == self.n else f"t{index + 1}"


# --- term variants ----------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: Fraction


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Add:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Mul:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Neg:
    arg: "Term"


@dataclass(frozen=True)
class Inv:
    arg: "Term"


@dataclass(frozen=True)
class Abs:
    arg: "Term"


@dataclass(frozen=True)
class Log:
    arg: "Term"


@dataclass(frozen=True)
class Exp:
    arg: "Term"


@dataclass(frozen=True)
class Root:
    degree: int
    arg: "Term"

    def __post_init__(self) -> None:
        if self.degree < 2:
            raise ValueError("root degree must be at least 2")


@dataclass(frozen=True)
class Pow:
    """|base|^exponent, totalized 0 at base = 0."""

    base: "Term"
    exponent: Fraction


@dataclass(frozen=True)
class Min:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Max:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class TruncLog:
    """log on [1/lam, lam], 0 outside.  Requires lam >= 1."""

    lam: Fraction
    arg: "Term"

    def __post_init__(self) -> None:
        if self.lam < 1:
            raise ValueError("truncation parameter must be >= 1")


@dataclass(frozen=True)
class TruncExp:
    """exp on [-lam, lam], 0 outside.  Requires lam > 0."""

    lam: Fraction
    arg: "Term"

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ValueError("truncation parameter must be positive")


@dataclass(frozen=True)
class SeriesDef:
    """Finite coefficient table of a power series, zero outside [-1,1]^arity.

    `tail` bounds the absolute error against the intended analytic function
    on the closed unit box; a zero tail means the table is exact.
    """

    name: str
    arity: int
    coeffs: tuple[tuple[tuple[int, ...], Fraction], ...]
    tail: Fraction

    def __post_init__(self) -> None:
        if self.arity < 1:
            raise ValueError("series arity must be at least 1")
        if self.tail < 0:
            raise ValueError("tail bound must be nonnegative")
        for exps, _ in self.coeffs:
            if len(exps) != self.arity or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent tuple {exps} in series {self.name}")


@dataclass(frozen=True)
class NamedSeries:
    series: SeriesDef
    args: tuple["Term", ...]

    def __post_init__(self) -> None:
        if len(self.args) != self.series.arity:
            raise ArityError(
                f"series {self.series.name} expects {self.series.arity} arguments"
            )


REL_OPS = ("<", "<=", ">", ">=", "==", "!=")


@dataclass(frozen=True)
class Atom:
    """A single comparison between two terms."""

    op: str
    left: "Term"
    right: "Term"

    def __post_init__(self) -> None:
        if self.op not in REL_OPS:
            raise ValueError(f"unknown relation {self.op!r}")


@dataclass(frozen=True)
class Guarded:
    """First branch whose conjunctive guard holds; 0 when none does.

    Branch guards are expected to be pairwise exclusive on every input;
    `check_guard_exclusivity` samples that invariant.
    """

    branches: tuple[tuple[tuple[Atom, ...], "Term"], ...]


Term = Union[
    Const, Var, Add, Mul, Neg, Inv, Abs, Log, Exp, Root, Pow, Min, Max,
    TruncLog, TruncExp, NamedSeries, Guarded,
]


# --- builtin series ---------------------------------------------------------


def _arctan_series(terms: int = 25) -> SeriesDef:
    coeffs = tuple(
        ((2 * k + 1,), Fraction((-1) ** k, 2 * k + 1)) for k in range(terms)
    )
    # alternating series: remainder after the k-th kept term is at most the
    # first omitted coefficient on [-1, 1]
    return SeriesDef("arctan", 1, coeffs, Fraction(1, 2 * terms + 1))


BUILTIN_SERIES: dict[str, SeriesDef] = {"arctan": _arctan_series()}


# --- construction helpers ---------------------------------------------------


def const(v: int | Fraction) -> Const:
    return Const(Fraction(v))


def sub(a: Term, b: Term) -> Add:
    return Add(a, Neg(b))


def div(a: Term, b: Term) -> Mul:
    return Mul(a, Inv(b))


ZERO = const(0)
ONE = const(1)


# --- structure --------------------------------------------------------------


def children(term: Term) -> Iterator[Term]:
    match term:
        case Const() | Var():
            return
        case Add(l, r) | Mul(l, r) | Min(l, r) | Max(l, r):
            yield l
            yield r
        case Neg(a) | Inv(a) | Abs(a) | Log(a) | Exp(a):
            yield a
        case Root(_, a) | TruncLog(_, a) | TruncExp(_, a):
            yield a
        case Pow(base, _):
            yield base
        case NamedSeries(_, args):
            yield from args
        case Guarded(branches):
            for guard, value in branches:
                for atom in guard:
                    yield atom.left
                    yield atom.right
                yield value
        case _:
            raise TermError(f"unknown term node {term!r}")


def map_children(term: Term, fn: Callable[[Term], Term]) -> Term:
    match term:
        case Const() | Var():
            return term
        case Add(l, r):
            return Add(fn(l), fn(r))
        case Mul(l, r):
            return Mul(fn(l), fn(r))
        case Min(l, r):
            return Min(fn(l), fn(r))
        case Max(l, r):
            return Max(fn(l), fn(r))
        case Neg(a):
            return Neg(fn(a))
        case Inv(a):
            return Inv(fn(a))
        case Abs(a):
            return Abs(fn(a))
        case Log(a):
            return Log(fn(a))
        case Exp(a):
            return Exp(fn(a))
        case Root(k, a):
            return Root(k, fn(a))
        case Pow(base, q):
            return Pow(fn(base), q)
        case TruncLog(lam, a):
            return TruncLog(lam, fn(a))
        case TruncExp(lam, a):
            return TruncExp(lam, fn(a))
        case NamedSeries(sd, args):
            return NamedSeries(sd, tuple(fn(a) for a in args))
        case Guarded(branches):
            return Guarded(
                tuple(
                    (
                        tuple(Atom(at.op, fn(at.left), fn(at.right)) for at in guard),
                        fn(value),
                    )
                    for guard, value in branches
                )
            )
        case _:
            raise TermError(f"unknown term node {term!r}")


def free_vars(term: Term) -> set[int]:
    out: set[int] = set()

    def walk(t: Term) -> None:
        if isinstance(t, Var):
            out.add(t.index)
        else:
            for c in children(t):
                walk(c)

    walk(term)
    return out


def depends_only_on_t(term: Term, ctx: VarContext) -> bool:
    """True iff the distinguished last variable does not occur."""
    return ctx.x_index not in free_vars(term)


def substitute(term: Term, assignments: Mapping[int, Term]) -> Term:
    """Capture-free structural substitution of variables by terms."""
    if isinstance(term, Var):
        return assignments.get(term.index, term)
    return map_children(term, lambda t: substitute(t, assignments))


# --- evaluation -------------------------------------------------------------


@dataclass(frozen=True)
class EvalResult:
    value: float
    convention_hits: int
    domain_flag: bool
    trunc_zero_hits: int = 0

    def __post_init__(self) -> None:
        assert self.domain_flag == (self.convention_hits > 0)


class _Counters:
    __slots__ = ("conv", "trunc")

    def __init__(self) -> None:
        self.conv = 0
        self.trunc = 0


def _atom_holds(atom: Atom, point: tuple[float, ...], c: _Counters) -> bool:
    lv = _eval(atom.left, point, c)
    rv = _eval(atom.right, point, c)
    match atom.op:
        case "<":
            return lv < rv
        case "<=":
            return lv <= rv
        case ">":
            return lv > rv
        case ">=":
            return lv >= rv
        case "==":
            return lv == rv
        case "!=":
            return lv != rv
    raise TermError(atom.op)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _eval(term: Term, point: tuple[float, ...], c: _Counters) -> float:
    match term:
        case Const(v):
            return float(v)
        case Var(i):
            return point[i]
        case Add(l, r):
            return _eval(l, point, c) + _eval(r, point, c)
        case Mul(l, r):
            return _eval(l, point, c) * _eval(r, point, c)
        case Neg(a):
            return -_eval(a, point, c)
        case Inv(a):
            v = _eval(a, point, c)
            if v == 0.0:
                c.conv += 1
                return 0.0
            return 1.0 / v
        case Abs(a):
            return abs(_eval(a, point, c))
        case Log(a):
            v = _eval(a, point, c)
            if v <= 0.0:
                c.conv += 1
                return 0.0
            return math.log(v)
        case Exp(a):
            return _exp(_eval(a, point, c))
        case Root(k, a):
            v = _eval(a, point, c)
            if v < 0.0:
                c.conv += 1
                return 0.0
            return v ** (1.0 / k)
        case Pow(base, q):
            v = _eval(base, point, c)
            if v == 0.0:
                # 0 is the continuous extension for q > 0; only q <= 0 is a
                # genuine convention (|y|^q has no limit there)
                if q <= 0:
                    c.conv += 1
                return 0.0
            return math.pow(abs(v), float(q))
        case Min(l, r):
            return min(_eval(l, point, c), _eval(r, point, c))
        case Max(l, r):
            return max(_eval(l, point, c), _eval(r, point, c))
        case TruncLog(lam, a):
            v = _eval(a, point, c)
            fl = float(lam)
            if 1.0 / fl <= v <= fl:
                return math.log(v)
            c.trunc += 1
            return 0.0
        case TruncExp(lam, a):
            v = _eval(a, point, c)
            fl = float(lam)
            if -fl <= v <= fl:
                return _exp(v)
            c.trunc += 1
            return 0.0
        case NamedSeries(sd, args):
            vals = [_eval(a, point, c) for a in args]
            if any(abs(v) > 1.0 for v in vals):
                c.trunc += 1
                return 0.0
            total = 0.0
            for exps, coeff in sd.coeffs:
                mono = float(coeff)
                for v, e in zip(vals, exps):
                    mono *= v**e
                total += mono
            return total
        case Guarded(branches):
            for guard, value in branches:
                if all(_atom_holds(atom, point, c) for atom in guard):
                    return _eval(value, point, c)
            return 0.0
    raise TermError(f"unknown term node {term!r}")


def eval_term(term: Term, point: tuple[float, ...], ctx: VarContext) -> EvalResult:
    if len(point) != ctx.arity:
        raise ArityError(f"point has length {len(point)}, expected {ctx.arity}")
    c = _Counters()
    value = _eval(term, tuple(float(p) for p in point), c)
    return EvalResult(value, c.conv, c.conv > 0, c.trunc)


def eval_value(term: Term, point: tuple[float, ...]) -> float:
    """Bare totalized value, when the caller does not need convention counts."""
    return _eval(term, point, _Counters())


def check_guard_exclusivity(
    term: Term, points: list[tuple[float, ...]]
) -> Optional[tuple[float, ...]]:
    """Return a sample point where some guarded node fires twice, if any."""

    def multi(t: Term, p: tuple[float, ...]) -> bool:
        if isinstance(t, Guarded):
            c = _Counters()
            live = sum(
                1
                for guard, _ in t.branches
                if all(_atom_holds(a, p, c) for a in guard)
            )
            if live > 1:
                return True
        return any(multi(ch, p) for ch in children(t))

    for p in points:
        if multi(term, p):
            return p
    return None


# --- interval evaluation ----------------------------------------------------


@dataclass(frozen=True)
class Enclosure:
    interval: Interval
    convention_possible: bool
    trunc_possible: bool

    @property
    def lo(self) -> float:
        return self.interval.lo

    @property
    def hi(self) -> float:
        return self.interval.hi


class _IvState:
    __slots__ = ("conv", "trunc")

    def __init__(self) -> None:
        self.conv = False
        self.trunc = False


_TRUE, _FALSE, _MAYBE = 1, 0, -1


def _atom_tristate(atom: Atom, box: tuple[Interval, ...], s: _IvState) -> int:
    l = _ieval(atom.left, box, s)
    r = _ieval(atom.right, box, s)
    match atom.op:
        case "<":
            if l.hi < r.lo:
                return _TRUE
            if l.lo >= r.hi:
                return _FALSE
        case "<=":
            if l.hi <= r.lo:
                return _TRUE
            if l.lo > r.hi:
                return _FALSE
        case ">":
            if l.lo > r.hi:
                return _TRUE
            if l.hi <= r.lo:
                return _FALSE
        case ">=":
            if l.lo >= r.hi:
                return _TRUE
            if l.hi < r.lo:
                return _FALSE
        case "==":
            if l.lo == l.hi == r.lo == r.hi:
                return _TRUE
            if l.hi < r.lo or r.hi < l.lo:
                return _FALSE
        case "!=":
            if l.hi < r.lo or r.hi < l.lo:
                return _TRUE
            if l.lo == l.hi == r.lo == r.hi:
                return _FALSE
    return _MAYBE


def _ieval(term: Term, box: tuple[Interval, ...], s: _IvState) -> Interval:
    match term:
        case Const(v):
            return iv.point(float(v))
        case Var(i):
            return box[i]
        case Add(l, r):
            return iv.add(_ieval(l, box, s), _ieval(r, box, s))
        case Mul(l, r):
            return iv.mul(_ieval(l, box, s), _ieval(r, box, s))
        case Neg(a):
            return iv.neg(_ieval(a, box, s))
        case Inv(a):
            res, flag = iv.inv(_ieval(a, box, s))
            s.conv |= flag
            return res
        case Abs(a):
            return iv.abs_(_ieval(a, box, s))
        case Log(a):
            res, flag = iv.log_(_ieval(a, box, s))
            s.conv |= flag
            return res
        case Exp(a):
            return iv.exp_(_ieval(a, box, s))
        case Root(k, a):
            res, flag = iv.root_(_ieval(a, box, s), k)
            s.conv |= flag
            return res
        case Pow(base, q):
            res, flag = iv.pow_abs(_ieval(base, box, s), q)
            s.conv |= flag
            return res
        case Min(l, r):
            return iv.min_(_ieval(l, box, s), _ieval(r, box, s))
        case Max(l, r):
            return iv.max_(_ieval(l, box, s), _ieval(r, box, s))
        case TruncLog(lam, a):
            v = _ieval(a, box, s)
            fl = float(lam)
            window = Interval(1.0 / fl, fl)
            clipped_lo = max(v.lo, window.lo)
            clipped_hi = min(v.hi, window.hi)
            parts = []
            if clipped_lo <= clipped_hi:
                live, _ = iv.log_(Interval(clipped_lo, clipped_hi))
                parts.append(live)
            if not v.subset_of(window):
                s.trunc = True
                parts.append(iv.ZERO)
            return iv.hull(*parts)
        case TruncExp(lam, a):
            v = _ieval(a, box, s)
            fl = float(lam)
            window = Interval(-fl, fl)
            clipped_lo = max(v.lo, window.lo)
            clipped_hi = min(v.hi, window.hi)
            parts = []
            if clipped_lo <= clipped_hi:
                parts.append(iv.exp_(Interval(clipped_lo, clipped_hi)))
            if not v.subset_of(window):
                s.trunc = True
                parts.append(iv.ZERO)
            return iv.hull(*parts)
        case NamedSeries(sd, args):
            vals = [_ieval(a, box, s) for a in args]
            inside = all(v.subset_of(iv.UNIT) for v in vals)
            intersects = all(v.hi >= -1.0 and v.lo <= 1.0 for v in vals)
            clipped = [
                Interval(max(v.lo, -1.0), min(v.hi, 1.0)) if intersects else v
                for v in vals
            ]
            parts = []
            if intersects:
                total = iv.ZERO
                for exps, coeff in sd.coeffs:
                    mono = iv.point(float(coeff))
                    for v, e in zip(clipped, exps):
                        mono = iv.mul(mono, iv.ipow(v, e))
                    total = iv.add(total, mono)
                t = float(sd.tail)
                parts.append(iv.add(total, Interval(-t, t)))
            if not inside:
                s.trunc = True
                parts.append(iv.ZERO)
            return iv.hull(*parts)
        case Guarded(branches):
            parts = []
            some_definitely_live = False
            for guard, value in branches:
                states = [_atom_tristate(a, box, s) for a in guard]
                if any(st == _FALSE for st in states):
                    continue
                parts.append(_ieval(value, box, s))
                if all(st == _TRUE for st in states):
                    some_definitely_live = True
            if not some_definitely_live:
                parts.append(iv.ZERO)
            return iv.hull(*parts)
    raise TermError(f"unknown term node {term!r}")


def eval_interval(term: Term, box: list[Interval] | tuple[Interval, ...]) -> Enclosure:
    s = _IvState()
    res = _ieval(term, tuple(box), s)
    return Enclosure(res, s.conv, s.trunc)


# --- constant folding -------------------------------------------------------


def constant_fold(term: Term) -> Term:
    """Fold exactly computable rational subtrees; keep the rest untouched.

    Only operations closed over the rationals are folded (plus log 1 = 0,
    exp 0 = 1 and roots of 0/1), so folding never changes the evaluated
    value and never hides a convention activation except for multiply-by-
    zero, which is value-correct either way.
    """
    t = map_children(term, constant_fold)
    match t:
        case Add(Const(a), Const(b)):
            return Const(a + b)
        case Add(Const(z), r) if z == 0:
            return r
        case Add(l, Const(z)) if z == 0:
            return l
        case Mul(Const(a), Const(b)):
            return Const(a * b)
        case Mul(Const(z), _) | Mul(_, Const(z)) if z == 0:
            return Const(Fraction(0))
        case Mul(Const(o), r) if o == 1:
            return r
        case Mul(l, Const(o)) if o == 1:
            return l
        case Neg(Const(a)):
            return Const(-a)
        case Neg(Neg(a)):
            return a
        case Abs(Const(a)):
            return Const(abs(a))
        case Inv(Const(a)) if a != 0:
            return Const(1 / a)
        case Min(Const(a), Const(b)):
            return Const(min(a, b))
        case Max(Const(a), Const(b)):
            return Const(max(a, b))
        case Pow(Const(a), q) if q.denominator == 1 and a != 0:
            return Const(abs(a) ** q.numerator) if q >= 0 else Const(
                Fraction(1) / abs(a) ** (-q.numerator)
            )
        case Log(Const(o)) if o == 1:
            return Const(Fraction(0))
        case Exp(Const(z)) if z == 0:
            return Const(Fraction(1))
        case Root(_, Const(z)) if z == 0:
            return Const(Fraction(0))
        case Root(_, Const(o)) if o == 1:
            return Const(Fraction(1))
    return t


def is_zero_term(term: Term) -> bool:
    """Symbolic zero test: the term folds to the constant 0."""
    folded = constant_fold(term)
    return isinstance(folded, Const) and folded.value == 0


def structurally_equal(a: Term, b: Term) -> bool:
    return constant_fold(a) == constant_fold(b)
