"""Logarithmic scales: construction data and rigorous sampling verification.

A scale of depth r on a cell is the tuple y_0 = x - c_0(t),
y_j = log|y_{j-1}| - c_j(t) for j = 1..r, where every center component
c_j depends only on t.  Validity asks for constant signs, and per level
either a symbolically zero center or a uniform contraction
|y_0| < eps |x| (resp. |y_j| < eps |log|y_{j-1}||) with eps < 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .cells import Cell, SamplePlan, sample
from .report import INCONCLUSIVE, REFUTED, VERIFIED, VerificationReport
from .terms import Term, VarContext, depends_only_on_t, eval_term, is_zero_term

THETA_ZERO = "theta-zero"
EpsilonWitness = Union[Fraction, float, str, None]

DEFAULT_MARGIN = 0.05  # relative headroom added to observed sup ratios


class ScaleError(Exception):
    pass


class ScaleBreakdown(ScaleError):
    """Some y_{j-1} vanished, so the next log is undefined."""

    def __init__(self, level: int, point: tuple[float, ...]):
        self.level = level
        self.point = point
        super().__init__(f"scale breakdown at level {level}, point {point}")


class LiftMismatchError(ScaleError):
    """Internal error: the lifted scale failed its composition identity."""


@dataclass(frozen=True)
class LogScale:
    name: str
    nvars: int
    r: int
    center: tuple[Term, ...]
    sign_pattern: tuple[str, ...]
    epsilon_witnesses: Optional[tuple[EpsilonWitness, ...]] = None

    def __post_init__(self) -> None:
        if self.r < 0:
            raise ScaleError("scale depth must be nonnegative")
        if len(self.center) != self.r + 1:
            raise ScaleError("center must have r+1 components")
        if len(self.sign_pattern) != self.r + 1 or any(
            s not in ("+", "-") for s in self.sign_pattern
        ):
            raise ScaleError("sign pattern must be r+1 entries of '+'/'-'")
        ctx = VarContext(self.nvars)
        for j, theta in enumerate(self.center):
            if not depends_only_on_t(theta, ctx):
                raise ScaleError(f"center component {j} depends on x")
        if self.epsilon_witnesses is not None:
            if len(self.epsilon_witnesses) != self.r + 1:
                raise ScaleError("epsilon witnesses must have r+1 entries")
            for j, eps in enumerate(self.epsilon_witnesses):
                if eps == THETA_ZERO:
                    if not is_zero_term(self.center[j]):
                        raise ScaleError(
                            f"epsilon witness {j} claims a zero center, "
                            "but the center term is not zero"
                        )
                elif eps is not None and not 0 < float(eps) < 1:
                    raise ScaleError(f"epsilon witness {j} must lie in (0, 1)")

    @property
    def ctx(self) -> VarContext:
        return VarContext(self.nvars)

    def zero_levels(self) -> tuple[bool, ...]:
        return tuple(is_zero_term(theta) for theta in self.center)


@dataclass(frozen=True)
class ScaleValues:
    y: tuple[float, ...]


def _center_at(scale: LogScale, point: tuple[float, ...]) -> list[float]:
    ctx = scale.ctx
    out = []
    for theta in scale.center:
        res = eval_term(theta, point, ctx)
        if res.domain_flag:
            raise ScaleError(
                f"center term hit a totalization convention at {point}"
            )
        out.append(res.value)
    return out


def scale_values(scale: LogScale, point: tuple[float, ...]) -> ScaleValues:
    """The recurrence values (y_0..y_r) at a point.

    Raises ScaleBreakdown when some y_{j-1} vanishes along the way.
    """
    thetas = _center_at(scale, point)
    ys = [point[-1] - thetas[0]]
    for j in range(1, scale.r + 1):
        prev = ys[j - 1]
        if prev == 0.0:
            raise ScaleBreakdown(j, point)
        ys.append(math.log(abs(prev)) - thetas[j])
    return ScaleValues(tuple(ys))


def values_or_none(
    scale: LogScale,
) -> Callable[[tuple[float, ...]], Optional[tuple[float, ...]]]:
    """Adapter for region filters: per-point values, None on breakdown."""

    def fn(point: tuple[float, ...]) -> Optional[tuple[float, ...]]:
        try:
            return scale_values(scale, point).y
        except ScaleError:
            return None

    return fn


def verify_scale(
    scale: LogScale,
    cell: Cell,
    plan: SamplePlan,
    margin: float = DEFAULT_MARGIN,
) -> VerificationReport:
    """Check the scale's definitional conditions on cell samples.

    A verified verdict carries sup-ratio estimates (plus a safety margin)
    as epsilon witnesses; these are evidence from sampling, not a proof.
    """
    rep = VerificationReport()
    rep.meta.update(name=scale.name, kind="scale", samples=0, seed=plan.seed)
    points = sample(cell, plan)
    rep.meta["samples"] = len(points)
    zero = scale.zero_levels()

    signs_seen: list[set[int]] = [set() for _ in range(scale.r + 1)]
    sup_ratio = [0.0] * (scale.r + 1)
    sup_abs = [0.0] * (scale.r + 1)
    inf_abs = [math.inf] * (scale.r + 1)

    for p in points:
        try:
            ys = scale_values(scale, p).y
        except ScaleBreakdown as exc:
            rep.add(
                "recurrence",
                INCONCLUSIVE,
                f"scale breakdown at level {exc.level}",
                p,
            )
            continue
        for j, y in enumerate(ys):
            signs_seen[j].add(0 if y == 0.0 else (1 if y > 0 else -1))
            sup_abs[j] = max(sup_abs[j], abs(y))
            inf_abs[j] = min(inf_abs[j], abs(y))
        # contraction condition per level, unless the center is the zero term
        if not zero[0]:
            x = p[-1]
            if x == 0.0 or not abs(ys[0]) < abs(x):
                rep.add(
                    "level0-contraction",
                    REFUTED,
                    f"|y_0| >= |x| at {p}",
                    p,
                )
                continue
            sup_ratio[0] = max(sup_ratio[0], abs(ys[0]) / abs(x))
        for j in range(1, scale.r + 1):
            denom = abs(ys[j] + eval_term(scale.center[j], p, scale.ctx).value)
            # denom = |log|y_{j-1}||
            if not zero[j]:
                if denom == 0.0 or not abs(ys[j]) < denom:
                    rep.add(
                        f"level{j}-contraction",
                        REFUTED,
                        f"|y_{j}| >= |log|y_{j - 1}|| at {p}",
                        p,
                    )
                    break
                sup_ratio[j] = max(sup_ratio[j], abs(ys[j]) / denom)
            elif abs(ys[j]) > denom:
                rep.add(
                    f"level{j}-log-bound",
                    REFUTED,
                    f"|y_{j}| > |log|y_{j - 1}|| at {p}",
                    p,
                )
                break

    for j, seen in enumerate(signs_seen):
        if 0 in seen:
            rep.add(f"level{j}-sign", REFUTED, f"y_{j} vanishes at a sample")
        elif len(seen) > 1:
            rep.add(f"level{j}-sign", REFUTED, f"y_{j} changes sign across samples")
        elif seen:
            observed = "+" if 1 in seen else "-"
            declared = scale.sign_pattern[j]
            if observed != declared:
                rep.add(
                    f"level{j}-sign",
                    REFUTED,
                    f"declared sign {declared}, observed {observed}",
                )
            else:
                rep.add(f"level{j}-sign", VERIFIED, f"constant sign {observed}")

    estimates: list[Optional[float]] = []
    for j in range(scale.r + 1):
        if zero[j]:
            estimates.append(None)
            rep.add(f"level{j}-center", VERIFIED, "center is the zero term")
            continue
        est = sup_ratio[j] * (1.0 + margin)
        estimates.append(est)
        if not any(c.name == f"level{j}-contraction" and c.verdict == REFUTED for c in rep.checks):
            rep.add(
                f"level{j}-center",
                VERIFIED,
                f"sup ratio {sup_ratio[j]:.6g}, margined estimate {est:.6g}",
            )
        declared = (
            scale.epsilon_witnesses[j] if scale.epsilon_witnesses else None
        )
        if declared not in (None, THETA_ZERO) and sup_ratio[j] >= float(declared):
            rep.add(
                f"level{j}-declared-epsilon",
                REFUTED,
                f"declared epsilon {declared} but observed sup {sup_ratio[j]:.6g}",
            )

    rep.witnesses["epsilon_estimates"] = estimates
    rep.witnesses["sup_ratios"] = sup_ratio
    rep.witnesses["abs_range"] = [
        [inf_abs[j], sup_abs[j]] for j in range(scale.r + 1)
    ]
    return rep


def recover_center(
    values_at: Callable[[tuple[float, ...]], ScaleValues],
    scale_depth: int,
    cell: Cell,
    plan: SamplePlan,
    tol: float = 1e-9,
) -> VerificationReport:
    """Invert the recurrence pointwise and check per-t consistency.

    The center is determined by the values: c_0 = x - y_0 and
    c_j = log|y_{j-1}| - y_j.  Inconsistent recovery across samples that
    share the same t refutes the claim that a single center generated them.
    """
    rep = VerificationReport()
    rep.meta.update(kind="center-recovery", seed=plan.seed)
    points = sample(cell, plan)
    by_t: dict[tuple[float, ...], list[tuple[tuple[float, ...], tuple[float, ...]]]] = {}
    for p in points:
        ys = values_at(p).y
        rec = [p[-1] - ys[0]]
        ok = True
        for j in range(1, scale_depth + 1):
            if ys[j - 1] == 0.0:
                rep.add("recovery", INCONCLUSIVE, f"y_{j - 1} = 0 at {p}", p)
                ok = False
                break
            rec.append(math.log(abs(ys[j - 1])) - ys[j])
        if ok:
            by_t.setdefault(p[:-1], []).append((p, tuple(rec)))

    recovered: list[tuple[tuple[float, ...], tuple[float, ...]]] = []
    max_spread = 0.0
    for t, entries in by_t.items():
        centers = [rec for _, rec in entries]
        rep_point = entries[0][0]
        for j in range(scale_depth + 1):
            vals = [c[j] for c in centers]
            spread = max(vals) - min(vals)
            scalemag = 1.0 + max(abs(v) for v in vals)
            max_spread = max(max_spread, spread / scalemag)
            if spread > tol * scalemag:
                rep.add(
                    "consistency",
                    REFUTED,
                    f"center component {j} spreads {spread:.3g} across x at t={t}",
                    rep_point,
                )
        recovered.append((t, centers[0]))

    rep.witnesses["recovered"] = recovered
    rep.witnesses["max_relative_spread"] = max_spread
    if rep.verdict == VERIFIED:
        rep.add("consistency", VERIFIED, f"max relative spread {max_spread:.3g}")
    return rep


def pow_product(
    scale: LogScale, point: tuple[float, ...], q: Sequence[Fraction]
) -> float:
    """The weighted absolute product over the scale values at a point."""
    if len(q) != scale.r + 1:
        raise ScaleError(f"exponent vector must have length {scale.r + 1}")
    ys = scale_values(scale, point).y
    out = 1.0
    for y, qj in zip(ys, q):
        if qj == 0:
            continue
        if y == 0.0:
            if qj > 0:
                return 0.0
            raise ScaleBreakdown(scale.r, point)
        out *= math.pow(abs(y), float(qj))
    return out


def lift_scale(
    scale: LogScale,
    level: int,
    lifted_cell: Cell,
    cell: Cell,
    plan: SamplePlan,
    tol: float = 1e-9,
) -> LogScale:
    """Drop the first `level` stages: the tail is a scale on the lifted cell.

    The composition identity y_{level+j}(t, x) = mu_j(t, log|y_{level-1}(t,x)|)
    is re-checked on samples; a violation is a construction bug and raises.
    """
    if not 1 <= level <= scale.r:
        raise ScaleError("lift level must lie in 1..r")
    lifted = LogScale(
        name=f"{scale.name}|{level}",
        nvars=scale.nvars,
        r=scale.r - level,
        center=scale.center[level:],
        sign_pattern=scale.sign_pattern[level:],
        epsilon_witnesses=(
            scale.epsilon_witnesses[level:] if scale.epsilon_witnesses else None
        ),
    )
    for p in sample(cell, plan):
        try:
            ys = scale_values(scale, p).y
            inner = math.log(abs(ys[level - 1]))
            mus = scale_values(lifted, p[:-1] + (inner,)).y
        except ScaleError:
            continue
        for j, mu in enumerate(mus):
            ref = ys[level + j]
            if abs(mu - ref) > tol * (1.0 + abs(ref)):
                raise LiftMismatchError(
                    f"composition identity fails at {p}, level {level + j}: "
                    f"{mu} vs {ref}"
                )
    return lifted


def exp_iter(times: int, value: float = 1.0) -> float:
    """The `times`-fold iterated exponential."""
    for _ in range(times):
        value = math.exp(value)
    return value


def log_iter(times: int, value: float) -> Optional[float]:
    """The `times`-fold iterated log; None when it leaves the domain."""
    for _ in range(times):
        if value <= 0.0:
            return None
        value = math.log(value)
    return value


def find_M(
    scale: LogScale,
    cell: Cell,
    c: float,
    lam: Sequence[float],
    plan: SamplePlan,
    rel_tol: float = 1e-3,
) -> tuple[Optional[float], VerificationReport]:
    """Smallest tested threshold M past which the asymptotic bound holds.

    Follows the growth recipe: start at the r-fold iterated exponential of
    1, grow until |c| <= |y_1|/4 and |lam_l| log_l(|y_1|) <= |y_1|/(4r) on
    every sample of the region where all |y_l| > M, then tighten by
    bisection.  The target |c + sum lam_l log|y_l|| <= |y_1|/2 is verified
    on the returned region.
    """
    if scale.r < 1:
        raise ScaleError("the threshold search needs depth r >= 1")
    if len(lam) != scale.r:
        raise ScaleError(f"lambda vector must have length {scale.r}")
    rep = VerificationReport()
    rep.meta.update(kind="find-threshold", seed=plan.seed)
    points = sample(cell, plan)
    all_values = []
    for p in points:
        try:
            all_values.append(scale_values(scale, p).y)
        except ScaleError:
            continue
    r = scale.r

    def region(M: float) -> list[tuple[float, ...]]:
        return [ys for ys in all_values if all(abs(y) > M for y in ys[1:])]

    def passes(M: float) -> Optional[bool]:
        filtered = region(M)
        if not filtered:
            return None
        for ys in filtered:
            y1 = abs(ys[1])
            if abs(c) > y1 / 4.0:
                return False
            for l in range(1, r + 1):
                if lam[l - 1] == 0.0:
                    continue
                it = log_iter(l, y1)
                if it is None or abs(lam[l - 1]) * it > y1 / (4.0 * r):
                    return False
        return True

    M0 = exp_iter(r)
    state = passes(M0)
    if state is None:
        rep.add("region", INCONCLUSIVE, "no samples in the asymptotic regime")
        return None, rep
    if state:
        M = M0
    else:
        lo, hi = M0, M0
        found = None
        for _ in range(200):
            hi *= 2.0
            state = passes(hi)
            if state:
                found = hi
                break
            if state is None:
                # doubled past the sampled range; a passing window may
                # still sit between the last failure and the empty regime
                top = hi
                while top - lo > rel_tol * max(top, 1.0):
                    mid = 0.5 * (lo + top)
                    st = passes(mid)
                    if st:
                        found = mid
                        break
                    if st is None:
                        top = mid
                    else:
                        lo = mid
                break
            lo = hi
        if found is None:
            rep.add(
                "region",
                INCONCLUSIVE,
                "asymptotic regime empties before the bound holds",
            )
            return None, rep
        hi = found
        while (hi - lo) > rel_tol * hi:
            mid = 0.5 * (lo + hi)
            if passes(mid):
                hi = mid
            else:
                lo = mid
        M = hi

    bad = None
    for ys in region(M):
        y1 = abs(ys[1])
        total = c
        for l in range(1, r + 1):
            total += lam[l - 1] * math.log(abs(ys[l]))
        if abs(total) > y1 / 2.0:
            bad = ys
            break
    if bad is not None:
        rep.add("target-bound", REFUTED, f"|c + sum| > |y_1|/2 at values {bad}")
    else:
        rep.add(
            "target-bound",
            VERIFIED,
            f"|c + sum lam log|y|| <= |y_1|/2 on {len(region(M))} samples",
        )
    rep.witnesses["M"] = M
    return M, rep
