"""The similarity calculus: ratio pinching, witness search, propagation.

Two functions are similar on a point set when their ratio stays strictly
inside (1/delta, delta) for some delta > 1.  This module searches such
witnesses, checks claimed ones, and carries them through the two
constructive propagation steps: one logarithm step with the factor-2
bracket, and the chained product construction that replaces a weighted
product of scale values by a parameter-only function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .cells import Cell, SamplePlan, sample
from .report import INCONCLUSIVE, REFUTED, VERIFIED, VerificationReport
from .scales import LogScale, ScaleError, find_M, scale_values
from .terms import Abs, Add, Log, Mul, Neg, Pow, Term, const, eval_term

DEFAULT_MARGIN = 0.05


@dataclass(frozen=True)
class SimilarityWitness:
    delta: float
    sup_ratio: float
    inf_ratio: float
    points: int

    def __post_init__(self) -> None:
        if not (self.delta > 1.0 and 1.0 / self.delta < self.inf_ratio <= self.sup_ratio < self.delta):
            raise ValueError("witness does not pinch the observed ratios")


def _ratios(
    f: Term,
    g: Term,
    points: Sequence[tuple[float, ...]],
    ctx,
    rep: VerificationReport,
) -> Optional[list[tuple[tuple[float, ...], float]]]:
    out = []
    for p in points:
        fr = eval_term(f, p, ctx)
        gr = eval_term(g, p, ctx)
        if fr.domain_flag or gr.domain_flag:
            rep.add("domain", INCONCLUSIVE, "totalization fired while evaluating", p)
            continue
        if gr.value == 0.0:
            rep.add(
                "no-zero", REFUTED, "g vanishes, so no ratio pinch can exist", p
            )
            return None
        ratio = fr.value / gr.value
        if ratio <= 0.0:
            rep.add(
                "sign",
                REFUTED,
                "f and g disagree in sign (or f vanishes)",
                p,
            )
            return None
        out.append((p, ratio))
    return out


def check_similar(
    f: Term,
    g: Term,
    points: Sequence[tuple[float, ...]],
    delta: float,
    ctx,
) -> VerificationReport:
    """Verify the strict pinch (1/delta) g < f < delta g at every point."""
    rep = VerificationReport()
    rep.meta.update(kind="similarity-check", delta=delta, samples=len(points))
    if delta <= 1.0:
        raise ValueError("delta must exceed 1")
    ratios = _ratios(f, g, points, ctx, rep)
    if ratios is None:
        return rep
    sup = 0.0
    inf = math.inf
    for p, ratio in ratios:
        sup = max(sup, ratio)
        inf = min(inf, ratio)
        if not 1.0 / delta < ratio < delta:
            rep.add(
                "pinch",
                REFUTED,
                f"ratio {ratio:.6g} escapes (1/{delta:.6g}, {delta:.6g})",
                p,
            )
            return rep
    rep.witnesses.update(sup_ratio=sup, inf_ratio=inf, delta=delta)
    rep.add("pinch", VERIFIED, f"ratios within [{inf:.6g}, {sup:.6g}]")
    return rep


def search_delta(
    f: Term,
    g: Term,
    points: Sequence[tuple[float, ...]],
    ctx,
    margin: float = DEFAULT_MARGIN,
) -> tuple[Optional[SimilarityWitness], VerificationReport]:
    """Find a pinch witness from observed ratio extremes, or refute.

    The returned delta adds a relative margin on top of the observed
    extremes, since a sample sup underestimates the true sup.
    """
    rep = VerificationReport()
    rep.meta.update(kind="similarity-search", samples=len(points))
    ratios = _ratios(f, g, points, ctx, rep)
    if ratios is None:
        return None, rep
    if not ratios:
        rep.add("samples", INCONCLUSIVE, "no usable sample points")
        return None, rep
    sup = max(r for _, r in ratios)
    inf = min(r for _, r in ratios)
    delta = max(sup, 1.0 / inf) * (1.0 + margin)
    witness = SimilarityWitness(delta, sup, inf, len(ratios))
    rep.witnesses.update(delta=delta, sup_ratio=sup, inf_ratio=inf)
    rep.add("search", VERIFIED, f"delta = {delta:.6g}")
    return witness, rep


def _gt_filter(
    scale: LogScale, points: Sequence[tuple[float, ...]], M: float
) -> list[tuple[float, ...]]:
    out = []
    for p in points:
        try:
            ys = scale_values(scale, p).y
        except ScaleError:
            continue
        if all(abs(y) > M for y in ys[1:]):
            out.append(p)
    return out


def log_step(
    delta: float,
    M: float,
    scale: LogScale,
    level: int,
    psi: Term,
    cell: Cell,
    plan: SamplePlan,
) -> tuple[float, VerificationReport]:
    """One logarithm step of similarity propagation.

    Given |y_{level-1}| pinched by psi with witness delta past threshold M,
    the bracket |y_level|/2 < |log psi - c_level| < 2 |y_level| holds past
    N = max(M, 2 log delta); the new witness is always 2.
    """
    if not 1 <= level <= scale.r:
        raise ValueError("level must lie in 1..r")
    rep = VerificationReport()
    rep.meta.update(kind="log-step", level=level, delta=delta, M=M)
    points = sample(cell, plan)
    ctx = scale.ctx

    # precondition: |y_{level-1}| ~ psi with the given delta on the M-region
    region_m = _gt_filter(scale, points, M)
    sup = 0.0
    inf = math.inf
    for p in region_m:
        ys = scale_values(scale, p).y
        psi_v = eval_term(psi, p, ctx).value
        prev = abs(ys[level - 1])
        if psi_v <= 0.0 or prev == 0.0:
            rep.add("precondition", REFUTED, "psi or |y_{level-1}| not positive", p)
            return max(M, 2.0 * math.log(delta)), rep
        ratio = psi_v / prev
        sup, inf = max(sup, ratio), min(inf, ratio)
        if not 1.0 / delta < ratio < delta:
            rep.add(
                "precondition",
                REFUTED,
                f"|y_{level - 1}| ~ psi fails: ratio {ratio:.6g} vs delta {delta:.6g}",
                p,
            )
            return max(M, 2.0 * math.log(delta)), rep
    rep.add("precondition", VERIFIED, f"ratios within [{inf:.6g}, {sup:.6g}]")

    N = max(M, 2.0 * math.log(delta))
    region_n = _gt_filter(scale, points, N)
    if not region_n:
        rep.add("bracket", INCONCLUSIVE, f"no samples past N = {N:.6g}")
        return N, rep
    for p in region_n:
        ys = scale_values(scale, p).y
        psi_v = eval_term(psi, p, ctx).value
        theta_v = eval_term(scale.center[level], p, ctx).value
        if psi_v <= 0.0:
            rep.add("bracket", REFUTED, "psi not positive", p)
            return N, rep
        target = abs(math.log(psi_v) - theta_v)
        yl = abs(ys[level])
        if not yl / 2.0 < target < 2.0 * yl:
            rep.add(
                "bracket",
                REFUTED,
                f"|log psi - c_{level}| = {target:.6g} escapes "
                f"(|y_{level}|/2, 2|y_{level}|) = ({yl / 2:.6g}, {2 * yl:.6g})",
                p,
            )
            return N, rep
    rep.add("bracket", VERIFIED, f"factor-2 bracket on {len(region_n)} samples")
    rep.witnesses.update(N=N, new_delta=2.0)
    return N, rep


def psi_step_term(psi: Term, theta: Term) -> Term:
    """|log(psi) - theta|, the next member of the propagation chain."""
    return Abs(Add(Log(psi), Neg(theta)))


def chain_mu(
    scale: LogScale,
    psi: Term,
    q: Sequence[Fraction],
    cell: Cell,
    plan: SamplePlan,
    delta: float,
    M: float,
) -> tuple[float, Term, float, VerificationReport]:
    """Replace the weighted product of |y_1..y_r| by a parameter-only term.

    Starting from |y_1| ~ psi (witness delta past M), each level applies
    one log step giving witness 2; the product mu = prod psi_l^{q_l} then
    pinches prod |y_l|^{q_l} with delta_mu = prod delta_l^{|q_l|}.
    Returns (N, mu, delta_mu, report).
    """
    if len(q) != scale.r:
        raise ValueError(f"exponent vector must have length r = {scale.r}")
    rep = VerificationReport()
    rep.meta.update(kind="chain-mu", delta=delta, M=M)
    psis: list[Term] = [psi]
    deltas = [delta]
    N = M
    for level in range(2, scale.r + 1):
        N, step_rep = log_step(deltas[-1], N, scale, level, psis[-1], cell, plan)
        rep.absorb(f"step{level}", step_rep)
        if step_rep.verdict != VERIFIED:
            return N, const(1), math.inf, rep
        psis.append(psi_step_term(psis[-1], scale.center[level]))
        deltas.append(2.0)

    mu: Term = const(1)
    delta_mu = 1.0
    for psi_l, d_l, q_l in zip(psis, deltas, q):
        if q_l == 0:
            continue
        mu = Mul(mu, Pow(psi_l, q_l)) if mu != const(1) else Pow(psi_l, q_l)
        delta_mu *= d_l ** abs(float(q_l))
    delta_mu *= 1.0 + DEFAULT_MARGIN

    points = _gt_filter(scale, sample(cell, plan), N)
    if not points:
        rep.add("product", INCONCLUSIVE, f"no samples past N = {N:.6g}")
        return N, mu, delta_mu, rep
    ctx = scale.ctx
    for p in points:
        ys = scale_values(scale, p).y
        prod = 1.0
        for y, q_l in zip(ys[1:], q):
            if q_l != 0:
                prod *= math.pow(abs(y), float(q_l))
        mu_v = eval_term(mu, p, ctx).value
        if mu_v <= 0.0 or not 1.0 / delta_mu < prod / mu_v < delta_mu:
            rep.add(
                "product",
                REFUTED,
                f"product/mu ratio {prod / mu_v if mu_v else math.inf:.6g} "
                f"escapes delta {delta_mu:.6g}",
                p,
            )
            return N, mu, delta_mu, rep
    rep.add("product", VERIFIED, f"pinch with delta {delta_mu:.6g} on {len(points)} samples")
    rep.witnesses.update(N=N, delta_mu=delta_mu)
    return N, mu, delta_mu, rep


def center_step(
    scale: LogScale,
    psi: Term,
    q: Sequence[Fraction],
    cell: Cell,
    plan: SamplePlan,
    delta: float,
) -> tuple[Optional[float], Optional[Term], VerificationReport]:
    """Collapse y_0 ~ psi * prod |y_l|^{q_l} to y_0 ~ xi with xi t-only.

    kappa = max(delta, 1/delta) feeds the threshold search with c = log
    kappa and weights q; past that threshold |y_1| is pinched by
    Gamma = |log|psi| - c_1| with witness 2, the chained product replaces
    the |y_l| factors, and xi = psi * mu.
    """
    if len(q) != scale.r:
        raise ValueError(f"exponent vector must have length r = {scale.r}")
    rep = VerificationReport()
    rep.meta.update(kind="center-step", delta=delta)
    rep.notes.append(
        "constructibility of psi and the centers from the ambient family is "
        "assumed, not checked; pair with a classifier run when needed"
    )
    ctx = scale.ctx
    points = sample(cell, plan)

    # precondition on the full cell
    for p in points:
        try:
            ys = scale_values(scale, p).y
        except ScaleError:
            rep.add("precondition", INCONCLUSIVE, "scale breakdown", p)
            return None, None, rep
        rhs = eval_term(psi, p, ctx).value
        for y, q_l in zip(ys[1:], q):
            if q_l != 0:
                rhs *= math.pow(abs(y), float(q_l))
        if rhs == 0.0 or ys[0] / rhs <= 0.0 or not 1.0 / delta < ys[0] / rhs < delta:
            rep.add(
                "precondition",
                REFUTED,
                f"y_0 ~ psi*prod fails with delta {delta:.6g}",
                p,
            )
            return None, None, rep
    rep.add("precondition", VERIFIED, f"pinch with delta {delta:.6g}")

    kappa = max(delta, 1.0 / delta)
    M, find_rep = find_M(scale, cell, math.log(kappa), [float(v) for v in q], plan)
    rep.absorb("threshold", find_rep)
    if M is None:
        return None, None, rep

    gamma = Abs(Add(Log(Abs(psi)), Neg(scale.center[1])))
    region = _gt_filter(scale, points, M)
    for p in region:
        ys = scale_values(scale, p).y
        g_v = eval_term(gamma, p, ctx).value
        if g_v <= 0.0 or not g_v / 2.0 < abs(ys[1]) < 2.0 * g_v:
            rep.add(
                "gamma-bracket",
                REFUTED,
                f"|y_1| vs Gamma bracket fails: {abs(ys[1]):.6g} vs {g_v:.6g}",
                p,
            )
            return None, None, rep
    rep.add("gamma-bracket", VERIFIED, f"|y_1| ~ Gamma with witness 2 past M = {M:.6g}")

    N, mu, delta_mu, chain_rep = chain_mu(scale, gamma, q, cell, plan, 2.0, M)
    rep.absorb("chain", chain_rep)
    if chain_rep.verdict != VERIFIED:
        return None, None, rep

    xi: Term = Mul(psi, mu)
    delta_xi = delta * delta_mu
    for p in _gt_filter(scale, points, N):
        ys = scale_values(scale, p).y
        xi_v = eval_term(xi, p, ctx).value
        if xi_v == 0.0 or ys[0] / xi_v <= 0.0 or not 1.0 / delta_xi < ys[0] / xi_v < delta_xi:
            rep.add(
                "collapse",
                REFUTED,
                f"y_0 ~ xi fails with delta {delta_xi:.6g}",
                p,
            )
            return None, None, rep
    rep.add("collapse", VERIFIED, f"y_0 ~ xi with delta {delta_xi:.6g} past N = {N:.6g}")
    rep.witnesses.update(M=M, N=N, delta_xi=delta_xi)
    return N, xi, rep
