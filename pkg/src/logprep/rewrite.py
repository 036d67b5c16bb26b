"""Constructive rewrites: each emits new terms plus replayable obligations.

The four transformations consume previously verified witnesses (pinch
deltas, epsilon estimates, scales) and emit terms whose correctness is a
sampling obligation attached to the output.  An output is trusted only
when every obligation replays to a verified verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .cells import Cell, SamplePlan, sample
from .preparation import GsaPreparedForm, InvalidInputError, LAPreparingTuple, UnitSpec
from .report import INCONCLUSIVE, REFUTED, VERIFIED, VerificationReport, combine
from .scales import LogScale, ScaleError, scale_values
from .terms import (
    Abs, Add, Atom, Const, Exp, Guarded, Inv, Log, Mul, NamedSeries, Neg, Pow,
    Term, TruncExp, TruncLog, Var, VarContext, children, constant_fold,
    eval_term, free_vars, is_zero_term,
)

DEFAULT_TOL = 1e-9


@dataclass
class RewriteOutput:
    provenance: str
    outputs: dict[str, Term] = field(default_factory=dict)
    scalars: dict[str, float] = field(default_factory=dict)
    obligations: list[tuple[str, VerificationReport]] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return combine(*(rep.verdict for _, rep in self.obligations)) if self.obligations else VERIFIED

    @property
    def trusted(self) -> bool:
        return self.verdict == VERIFIED

    def add_obligation(self, name: str, rep: VerificationReport) -> None:
        self.obligations.append((name, rep))


def product(factors: Sequence[Term]) -> Term:
    out: Optional[Term] = None
    for f in factors:
        out = f if out is None else Mul(out, f)
    return out if out is not None else Const(Fraction(1))


def scale_value_terms(scale: LogScale) -> list[Term]:
    """The recurrence values as terms over the scale's own context."""
    x = Var(scale.ctx.x_index)
    ys: list[Term] = [Add(x, Neg(scale.center[0]))]
    for j in range(1, scale.r + 1):
        ys.append(Add(Log(Abs(ys[j - 1])), Neg(scale.center[j])))
    return ys


def logs_on_x(term: Term, ctx: VarContext) -> int:
    """Count log nodes whose subtree involves the last variable."""
    total = 0
    if isinstance(term, Log) and ctx.x_index in free_vars(term.arg):
        total += 1
    for c in children(term):
        total += logs_on_x(c, ctx)
    return total


def _pow_factors(var_offset: int, exps: Sequence[Fraction]) -> list[Term]:
    return [
        Pow(Var(var_offset + j), q_j)
        for j, q_j in enumerate(exps)
        if q_j != 0
    ]


def _check_equal_on(
    rep: VerificationReport,
    name: str,
    lhs: Term,
    rhs: Term,
    points: Sequence[tuple[float, ...]],
    ctx: VarContext,
    tol: float,
    slop_term: Optional[Term] = None,
    slop_scale: float = 0.0,
    require_live: bool = False,
) -> None:
    for p in points:
        lv = eval_term(lhs, p, ctx)
        rv = eval_term(rhs, p, ctx)
        if require_live and rv.trunc_zero_hits > 0:
            rep.add(name, REFUTED, "a truncation window took its zero branch", p)
            return
        if lv.domain_flag or rv.domain_flag:
            rep.add(name, INCONCLUSIVE, "totalization fired during comparison", p)
            continue
        slop = slop_scale * abs(eval_term(slop_term, p, ctx).value) if slop_term is not None else 0.0
        if abs(lv.value - rv.value) > tol * (1.0 + abs(lv.value)) + slop:
            rep.add(
                name,
                REFUTED,
                f"values differ: {lv.value:.12g} vs {rv.value:.12g}",
                p,
            )
            return
    rep.add(name, VERIFIED, f"pointwise equality on {len(points)} samples")


def _unit_term(unit: UnitSpec, args: Sequence[Term], tag: str) -> Term:
    """The unit as a term: a restricted-series node, or a constant for arity 0."""
    if unit.arity == 0:
        return Const(sum((c for _, c in unit.coeffs), Fraction(0)))
    return NamedSeries(unit.to_series_def(tag), tuple(args))


# --- collapse of a scale-based certificate -----------------------------------


def collapse_la(
    tup: LAPreparingTuple,
    f: Term,
    cell: Cell,
    plan: SamplePlan,
    tol: float = DEFAULT_TOL,
) -> RewriteOutput:
    """Repackage a verified certificate as G(eta(t), Y(t,x)).

    G lives over s+1 coefficient slots z_0..z_s followed by r+1 value
    slots w_0..w_r; the series factor is zero outside the unit box, which
    matches the guarded zero-extension because the whole product vanishes
    with it.
    """
    s, r = tup.unit.arity, tup.r
    out = RewriteOutput(provenance=f"collapse({tup.name})")
    w0 = s + 1
    alpha0 = product([Var(0)] + _pow_factors(w0, tup.q))
    alphas = [
        product([Var(1 + i)] + _pow_factors(w0, tup.P[i])) for i in range(s)
    ]
    G = Mul(alpha0, _unit_term(tup.unit, alphas, f"{tup.name}_unit"))
    eta = [tup.a, *tup.b]
    out.outputs["G"] = G
    for i, e in enumerate(eta):
        out.outputs[f"eta{i}"] = e

    ys = scale_value_terms(tup.scale)
    subst = {i: eta[i] for i in range(s + 1)}
    subst.update({w0 + j: ys[j] for j in range(r + 1)})
    applied = substitute_all(G, subst)
    rep = VerificationReport()
    rep.meta.update(kind="collapse-obligation", name=tup.name)
    points = sample(cell, plan)
    _check_equal_on(
        rep, "reassembly", f, applied, points, tup.ctx, tol,
        slop_term=substitute_all(alpha0, subst), slop_scale=float(tup.unit.tail),
        require_live=True,
    )
    out.add_obligation("reassembly", rep)
    return out


def substitute_all(term: Term, mapping: dict[int, Term]) -> Term:
    from .terms import substitute

    return substitute(term, mapping)


def collapse_la_log(
    tup: LAPreparingTuple,
    h: Term,
    cell: Cell,
    plan: SamplePlan,
    tol: float = DEFAULT_TOL,
) -> RewriteOutput:
    """Log of a positive prepared function as H(eta(t), Y(t,x), log|y_last|).

    eta gains the log of the coefficient and the upper center components;
    H is the exponent sum plus the log of the unit, guarded on the unit
    box.
    """
    s, rho = tup.unit.arity, tup.r
    out = RewriteOutput(provenance=f"collapse-log({tup.name})")
    zn = s + rho + 2  # z_0..z_{s+rho+1}
    w0 = zn  # w_0..w_{rho+1}
    beta: Term = Var(0)
    for j in range(rho + 1):
        q_j = tup.q[j]
        if q_j != 0:
            beta = Add(beta, Mul(Const(q_j), Add(Var(w0 + j + 1), Var(s + j + 1))))
    alphas = [
        product([Var(1 + i)] + _pow_factors(w0, tup.P[i])) for i in range(s)
    ]
    body = Add(beta, Log(_unit_term(tup.unit, alphas, f"{tup.name}_unit"))) if s else Add(
        beta, Log(_unit_term(tup.unit, [], f"{tup.name}_unit"))
    )
    if s:
        guard = tuple(Atom("<=", Abs(a), Const(Fraction(1))) for a in alphas)
        H: Term = Guarded(((guard, body),))
    else:
        H = body
    out.outputs["H"] = H

    eta: list[Term] = [Log(tup.a), *tup.b, *tup.scale.center[1:], Const(Fraction(0))]
    for i, e in enumerate(eta):
        out.outputs[f"eta{i}"] = e
    ys = scale_value_terms(tup.scale)
    subst = {i: eta[i] for i in range(zn)}
    subst.update({w0 + j: ys[j] for j in range(rho + 1)})
    subst[w0 + rho + 1] = Log(Abs(ys[rho]))
    applied = substitute_all(H, subst)

    rep = VerificationReport()
    rep.meta.update(kind="collapse-log-obligation", name=tup.name)
    points = sample(cell, plan)
    for p in points:
        if not eval_term(h, p, tup.ctx).value > 0.0:
            rep.add("positivity", REFUTED, "h is not positive at a sample", p)
            out.add_obligation("log-identity", rep)
            return out
        if not eval_term(tup.a, p, tup.ctx).value > 0.0:
            rep.add("positivity", REFUTED, "coefficient is not positive", p)
            out.add_obligation("log-identity", rep)
            return out
    _check_equal_on(rep, "log-identity", Log(h), applied, points, tup.ctx, tol)
    out.add_obligation("log-identity", rep)
    return out


# --- order reduction via the truncated log window ----------------------------


def reduce_order(
    scale: LogScale,
    xi: Term,
    delta: float,
    cell: Cell,
    plan: SamplePlan,
    level: int = 0,
    tol: float = DEFAULT_TOL,
    points: Optional[list[tuple[float, ...]]] = None,
) -> RewriteOutput:
    """Replace y_{level+1} by a truncated-log expression over xi.

    Given y_level pinched by the parameter-only xi with witness delta, the
    replacement log-window[1/delta, delta](y_level / xi) + log|xi| -
    c_{level+1} agrees with y_{level+1} wherever the window stays live;
    deeper levels chain through ordinary logs.  A zero-branch hit refutes
    the claimed witness.
    """
    if not 0 <= level < scale.r:
        raise InvalidInputError("level must lie in 0..r-1")
    if delta <= 1.0:
        raise InvalidInputError("the pinch witness must exceed 1")
    ctx = scale.ctx
    if scale.ctx.x_index in free_vars(xi):
        raise InvalidInputError("xi must depend only on the parameters")
    out = RewriteOutput(provenance=f"reduce-order({scale.name}, level {level})")
    pts = points if points is not None else sample(cell, plan)

    ys = scale_value_terms(scale)
    lam = Fraction(delta)
    window = TruncLog(lam, Mul(ys[level], Inv(xi)))
    replacement: dict[int, Term] = {
        level
        + 1: Add(window, Add(Log(Abs(xi)), Neg(scale.center[level + 1])))
    }
    for j in range(level + 2, scale.r + 1):
        replacement[j] = Add(
            Log(Abs(replacement[j - 1])), Neg(scale.center[j])
        )
    for j, term in replacement.items():
        out.outputs[f"y{j}_star"] = term
    out.scalars["lambda"] = float(lam)

    pre = VerificationReport()
    pre.meta.update(kind="pinch-precondition")
    for p in pts:
        try:
            vals = scale_values(scale, p).y
        except ScaleError:
            pre.add("pinch", INCONCLUSIVE, "scale breakdown", p)
            continue
        xi_v = eval_term(xi, p, ctx).value
        if xi_v == 0.0 or vals[level] / xi_v <= 0.0:
            pre.add("pinch", REFUTED, "xi vanishes or flips sign against y", p)
            break
        ratio = vals[level] / xi_v
        if not 1.0 / delta < ratio < delta:
            pre.add("pinch", REFUTED, f"ratio {ratio:.6g} escapes the witness", p)
            break
    if pre.verdict == VERIFIED:
        pre.add("pinch", VERIFIED, f"y_{level} pinched by xi with delta {delta:.6g}")
    out.add_obligation("precondition", pre)
    if pre.verdict != VERIFIED:
        return out

    for j in sorted(replacement):
        rep = VerificationReport()
        rep.meta.update(kind="replacement-equality", level=j)
        for p in pts:
            try:
                vals = scale_values(scale, p).y
            except ScaleError:
                rep.add(f"y{j}", INCONCLUSIVE, "scale breakdown", p)
                continue
            res = eval_term(replacement[j], p, ctx)
            if res.trunc_zero_hits > 0:
                rep.add(
                    f"y{j}",
                    REFUTED,
                    "truncation zero branch hit: delta was not a valid witness",
                    p,
                )
                break
            if abs(res.value - vals[j]) > tol * (1.0 + abs(vals[j])):
                rep.add(
                    f"y{j}",
                    REFUTED,
                    f"replacement differs: {res.value:.12g} vs {vals[j]:.12g}",
                    p,
                )
                break
        if rep.verdict == VERIFIED:
            rep.add(f"y{j}", VERIFIED, f"replacement matches on {len(pts)} samples")
        out.add_obligation(f"y{j}_star", rep)
        if rep.verdict != VERIFIED:
            return out
    return out


# --- eliminating the innermost exponential -----------------------------------


def eliminate_exp(
    F: Term,
    g_terms: Sequence[Term],
    h_terms: Sequence[Term],
    theta: Term,
    delta: float,
    cell: Cell,
    plan: SamplePlan,
    tol: float = DEFAULT_TOL,
) -> RewriteOutput:
    """Remove the last exp slot of F using a pinch of exp(h_last) by theta.

    F takes (g_1..g_k, h_last, exp(h_1)..exp(h_{last-1}), z); theta is an
    exp-free function of everything but z.  The emitted G feeds
    theta * exp-window[lambda](h_last - log theta) into the z slot with
    lambda = log delta, and must reproduce F's value with the window live
    throughout.
    """
    k, l = len(g_terms), len(h_terms)
    if l < 1:
        raise InvalidInputError("need at least one exponential slot")
    if delta <= 1.0:
        raise InvalidInputError("the pinch witness must exceed 1")
    from .classify import NotLogAnalyticError, order_bound

    try:
        order_bound(theta)
    except NotLogAnalyticError:
        raise InvalidInputError("theta must be exp-free")
    out = RewriteOutput(provenance="eliminate-exp")
    lam = Fraction(math.log(delta))
    z_index = k + l
    G = substitute_all(
        F,
        {z_index: Mul(theta, TruncExp(lam, Add(Var(k), Neg(Log(theta)))))},
    )
    out.outputs["G"] = G
    out.scalars["lambda"] = float(lam)

    ctx = cell.ctx
    beta: dict[int, Term] = {i: g_terms[i] for i in range(k)}
    beta[k] = h_terms[l - 1]
    for j in range(1, l):
        beta[k + j] = Exp(h_terms[j - 1])
    alpha_term = substitute_all(F, {**beta, z_index: Exp(h_terms[l - 1])})
    g_applied = substitute_all(G, beta)
    theta_applied = substitute_all(theta, beta)

    points = sample(cell, plan)
    pre = VerificationReport()
    pre.meta.update(kind="pinch-precondition", delta=delta)
    for p in points:
        th = eval_term(theta_applied, p, ctx).value
        if th <= 0.0:
            pre.add("pinch", REFUTED, "theta is not positive at a sample", p)
            break
        z = eval_term(Exp(h_terms[l - 1]), p, ctx).value
        ratio = z / th
        if not 1.0 / delta < ratio < delta:
            pre.add("pinch", REFUTED, f"exp(h)/theta = {ratio:.6g} escapes delta", p)
            break
    if pre.verdict == VERIFIED:
        pre.add("pinch", VERIFIED, f"exp(h_last) pinched by theta with delta {delta:.6g}")
    out.add_obligation("precondition", pre)
    if pre.verdict != VERIFIED:
        return out

    rep = VerificationReport()
    rep.meta.update(kind="elimination-obligation")
    _check_equal_on(
        rep, "alpha", alpha_term, g_applied, points, ctx, tol, require_live=True
    )
    out.add_obligation("alpha", rep)
    return out


# --- log of an order-0 prepared slot -----------------------------------------


def _verify_form_on_points(
    form: GsaPreparedForm,
    F_term: Term,
    points: Sequence[tuple[float, ...]],
    tol: float,
) -> VerificationReport:
    """Order-0 form checks replayed on an explicit point list."""
    from .preparation import _check_unit, _rel_close

    rep = VerificationReport()
    rep.meta.update(kind="form-on-points", name=form.name)
    ctx = form.ctx
    _check_unit(rep, form.unit)
    for p in points:
        z = p[-1]
        theta_v = eval_term(form.theta, p, ctx).value
        y0 = z - theta_v
        if y0 == 0.0:
            rep.add("side", REFUTED, "z hits the center", p)
            return rep
        phis = []
        for j, (b_j, p_j) in enumerate(zip(form.b, form.p)):
            phi = eval_term(b_j, p, ctx).value * math.pow(abs(y0), float(p_j))
            if not -1.0 <= phi <= 1.0:
                rep.add("phi-range", REFUTED, f"phi_{j + 1} leaves [-1, 1]", p)
                return rep
            phis.append(phi)
        a_v = eval_term(form.a, p, ctx).value
        lead = a_v * math.pow(abs(y0), float(form.q))
        rhs = lead * form.unit.value(phis)
        fv = eval_term(F_term, p, ctx).value
        if fv <= 0.0:
            rep.add("positivity", REFUTED, "prepared function is not positive", p)
            return rep
        if not _rel_close(fv, rhs, tol, abs(lead) * float(form.unit.tail)):
            rep.add("pointwise", REFUTED, f"F = {fv:.12g} vs form {rhs:.12g}", p)
            return rep
    rep.add("pointwise", VERIFIED, f"form holds on {len(points)} samples")
    return rep


def log_of_prepared(
    form: GsaPreparedForm,
    F_term: Term,
    beta_terms: Sequence[Term],
    z_term: Term,
    hl_index: int,
    cell: Cell,
    plan: SamplePlan,
    tol: float = DEFAULT_TOL,
) -> RewriteOutput:
    """Emit the log of a positive order-0 form with zero center.

    The form and F_term live over the image coordinates (the beta slots
    plus the last slot z); the identity log F = log a + q*y_hl +
    log(unit) uses that the hl slot already carries log z.
    """
    if not is_zero_term(form.theta):
        raise InvalidInputError("the order-0 log rewrite needs a zero center")
    if not 0 <= hl_index < len(beta_terms):
        raise InvalidInputError("hl_index must point into the beta slots")
    out = RewriteOutput(provenance=f"log-of-prepared({form.name})")
    ctx = form.ctx
    x = Var(ctx.x_index)
    s = form.unit.arity
    phis = [
        Mul(form.b[i], Pow(x, form.p[i]))
        for i in range(s)
    ]
    body: Term = Add(
        Add(Log(form.a), Mul(Const(form.q), Var(hl_index))),
        Log(_unit_term(form.unit, phis, f"{form.name}_unit")),
    )
    if s:
        guard = tuple(Atom("<=", Abs(phi), Const(Fraction(1))) for phi in phis)
        H: Term = Guarded(((guard, body),))
    else:
        H = body
    H = constant_fold(H)
    out.outputs["H"] = H

    cell_ctx = cell.ctx
    subst = {i: beta_terms[i] for i in range(len(beta_terms))}
    subst[ctx.x_index] = z_term
    H_beta = substitute_all(H, subst)
    F_beta = substitute_all(F_term, subst)
    out.outputs["H_beta"] = H_beta

    points = sample(cell, plan)
    image_points = [
        tuple(eval_term(bt, p, cell_ctx).value for bt in beta_terms)
        + (eval_term(z_term, p, cell_ctx).value,)
        for p in points
    ]
    out.add_obligation(
        "form", _verify_form_on_points(form, F_term, image_points, tol)
    )
    rep = VerificationReport()
    rep.meta.update(kind="log-identity")
    _check_equal_on(rep, "log-identity", Log(F_beta), H_beta, points, cell_ctx, tol)
    out.add_obligation("log-identity", rep)
    return out


# --- the center dichotomy -----------------------------------------------------


def center_dichotomy(
    combinator: Term,
    plain: Sequence[tuple[GsaPreparedForm, Term]],
    logged: Sequence[tuple[GsaPreparedForm, Term]],
    beta_terms: Sequence[Term],
    z_term: Term,
    hl_index: int,
    cell: Cell,
    plan: SamplePlan,
    tol: float = DEFAULT_TOL,
) -> RewriteOutput:
    """Case split on the shared center of an order-0 prepared family.

    Zero center: chain the log rewrite through every logged slot and emit
    the combined exp-free replacement.  Nonzero center: extract the pinch
    witness delta = max(1/(1-eps), 1+eps) from the observed contraction
    estimate and hand the similarity fact off to exp elimination.
    """
    forms = [f for f, _ in plain] + [f for f, _ in logged]
    if not forms:
        raise InvalidInputError("the family must be nonempty")
    theta0 = constant_fold(forms[0].theta)
    for f in forms[1:]:
        if constant_fold(f.theta) != theta0:
            raise InvalidInputError("family members do not share one center")
    out = RewriteOutput(provenance="center-dichotomy")
    ctx = cell.ctx
    points = sample(cell, plan)
    image_points = [
        tuple(eval_term(bt, p, ctx).value for bt in beta_terms)
        + (eval_term(z_term, p, ctx).value,)
        for p in points
    ]

    if is_zero_term(theta0):
        out.scalars["branch"] = 0.0
        replacements: dict[int, Term] = {}
        for idx, (form, F_term) in enumerate(logged):
            sub = log_of_prepared(
                form, F_term, beta_terms, z_term, hl_index, cell, plan, tol
            )
            for name, rep in sub.obligations:
                out.add_obligation(f"log{idx}:{name}", rep)
            if not sub.trusted:
                return out
            replacements[len(plain) + idx] = sub.outputs["H"]
        comb_subst: dict[int, Term] = {}
        for idx, (form, F_term) in enumerate(plain):
            comb_subst[idx] = F_term
        comb_subst.update(replacements)
        H_total = substitute_all(combinator, comb_subst)
        out.outputs["H"] = H_total

        rep = VerificationReport()
        rep.meta.update(kind="dichotomy-zero-branch")
        form_ctx = forms[0].ctx
        for p, ip in zip(points, image_points):
            direct = eval_term(combinator, _combined_values(plain, logged, ip, form_ctx), VarContext(len(plain) + len(logged) - 1)).value
            via = eval_term(H_total, ip, form_ctx).value
            if abs(direct - via) > tol * (1.0 + abs(direct)):
                rep.add("combined", REFUTED, f"{direct:.12g} vs {via:.12g}", p)
                out.add_obligation("combined", rep)
                return out
        rep.add("combined", VERIFIED, f"replacement matches on {len(points)} samples")
        out.add_obligation("combined", rep)
        return out

    out.scalars["branch"] = 1.0
    sup = 0.0
    sign_ok = True
    rep = VerificationReport()
    rep.meta.update(kind="dichotomy-nonzero-branch")
    form_ctx = forms[0].ctx
    for p, ip in zip(points, image_points):
        z = ip[-1]
        th = eval_term(theta0, ip, form_ctx).value
        if z == 0.0:
            rep.add("contraction", REFUTED, "z vanishes", p)
            out.add_obligation("similarity", rep)
            return out
        ratio = abs(z - th) / abs(z)
        sup = max(sup, ratio)
        if ratio >= 1.0:
            sign_ok = False
            rep.add("contraction", REFUTED, f"|z - theta| >= |z| (ratio {ratio:.6g})", p)
            out.add_obligation("similarity", rep)
            return out
    # a hair of headroom keeps the pinch strict at the extremal sample
    delta = max(1.0 / (1.0 - sup), 1.0 + sup) * (1.0 + 1e-9)
    out.scalars["delta"] = delta
    out.scalars["epsilon_estimate"] = sup
    for p, ip in zip(points, image_points):
        z = ip[-1]
        th = eval_term(theta0, ip, form_ctx).value
        r = z / th if th != 0.0 else math.inf
        if r <= 0.0 or not 1.0 / delta < r < delta:
            rep.add("similarity", REFUTED, f"z/theta = {r:.6g} escapes delta {delta:.6g}", p)
            out.add_obligation("similarity", rep)
            return out
    rep.add(
        "similarity",
        VERIFIED,
        f"exp(h_last) pinched by theta with delta {delta:.6g} (eps {sup:.6g})",
    )
    out.add_obligation("similarity", rep)
    out.outputs["theta"] = theta0
    return out


def _combined_values(plain, logged, image_point, form_ctx) -> tuple[float, ...]:
    vals = [eval_term(F_term, image_point, form_ctx).value for _, F_term in plain]
    for form, F_term in logged:
        v = eval_term(F_term, image_point, form_ctx).value
        vals.append(math.log(v) if v > 0 else 0.0)
    return tuple(vals)
