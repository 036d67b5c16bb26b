"""Sampled cells: boxes in t with term-valued fiber bounds in x.

A cell is a box of rational t-intervals together with two terms l(t) and
u(t) (either may be an infinite marker) bounding the last variable, so the
cell is { (t, x) : t in box, l(t) < x < u(t) }.  All verification in this
package runs on deterministic samples of such cells.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Optional, Sequence

from .terms import (
    Term, VarContext, eval_term, eval_value, is_zero_term, substitute,
)


class CellError(Exception):
    pass


class DegenerateCellError(CellError):
    """Fiber bounds cross at some sampled t."""


class UnsupportedLiftError(CellError):
    """The lifting map is not monotone in x on the samples."""


@dataclass(frozen=True)
class Cell:
    name: str
    nvars: int
    t_box: tuple[tuple[Fraction, Fraction], ...]
    lower: Optional[Term]  # None = unbounded below
    upper: Optional[Term]  # None = unbounded above
    nonzero_fiber: bool = False

    def __post_init__(self) -> None:
        if len(self.t_box) != self.nvars:
            raise CellError("t_box length must equal the parameter count")
        for lo, hi in self.t_box:
            if lo > hi:
                raise CellError(f"empty t interval [{lo}, {hi}]")

    @property
    def ctx(self) -> VarContext:
        return VarContext(self.nvars)


TStrategy = Literal["stratified-grid", "low-discrepancy"]
FiberStrategy = Literal["uniform", "geometric-toward-lower", "geometric-toward-upper"]


@dataclass(frozen=True)
class SamplePlan:
    t_counts: tuple[int, ...] | int = 10
    fiber_count: int = 10
    t_strategy: TStrategy = "stratified-grid"
    fiber_strategy: FiberStrategy = "uniform"
    seed: int = 0
    boundary_margin: float = 1e-3
    unbounded_span: float = 1e3  # cap when a fiber bound is infinite

    def __post_init__(self) -> None:
        counts = self.t_counts if isinstance(self.t_counts, tuple) else (self.t_counts,)
        if any(c < 2 for c in counts) or self.fiber_count < 2:
            raise CellError("sample counts must be at least 2 per axis")
        if not 0.0 < self.boundary_margin < 0.5:
            raise CellError("boundary margin must lie in (0, 1/2)")

    def counts_for(self, nvars: int) -> tuple[int, ...]:
        if isinstance(self.t_counts, tuple):
            if len(self.t_counts) != nvars:
                raise CellError("t_counts length must equal the parameter count")
            return self.t_counts
        return (self.t_counts,) * nvars


def plan_of_size(total: int, nvars: int, seed: int = 0, **kw) -> SamplePlan:
    """Roughly `total` samples split evenly between t-grid and fiber."""
    if nvars == 0:
        return SamplePlan(t_counts=(), fiber_count=max(2, total), seed=seed, **kw)
    per_axis = max(2, round(total ** (1.0 / (nvars + 1))))
    fiber = max(2, total // (per_axis**nvars))
    return SamplePlan(
        t_counts=(per_axis,) * nvars, fiber_count=fiber, seed=seed, **kw
    )


_HALTON_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)


def _radical_inverse(index: int, base: int) -> float:
    inv_base, result, fraction = 1.0 / base, 0.0, 1.0 / base
    while index > 0:
        result += (index % base) * fraction
        index //= base
        fraction *= inv_base
    return result


def _t_grid(cell: Cell, plan: SamplePlan) -> list[tuple[float, ...]]:
    n = cell.nvars
    if n == 0:
        return [()]
    counts = plan.counts_for(n)
    rng = random.Random(plan.seed)
    m = plan.boundary_margin
    axes_bounds = [
        (float(lo) + (float(hi) - float(lo)) * m, float(hi) - (float(hi) - float(lo)) * m)
        for lo, hi in cell.t_box
    ]
    total = math.prod(counts)
    points: list[tuple[float, ...]] = []
    if plan.t_strategy == "low-discrepancy":
        if n > len(_HALTON_PRIMES):
            raise CellError("low-discrepancy sampling supports at most 10 axes")
        offset = plan.seed * total + 1
        for k in range(total):
            pt = []
            for axis in range(n):
                u = _radical_inverse(offset + k, _HALTON_PRIMES[axis])
                lo, hi = axes_bounds[axis]
                pt.append(lo + (hi - lo) * u)
            points.append(tuple(pt))
        return points
    # stratified grid: one jittered point per stratum, per axis product
    strata_per_axis = []
    for axis in range(n):
        lo, hi = axes_bounds[axis]
        width = (hi - lo) / counts[axis]
        strata_per_axis.append([(lo + i * width, lo + (i + 1) * width) for i in range(counts[axis])])
    index = [0] * n
    while True:
        pt = []
        for axis in range(n):
            slo, shi = strata_per_axis[axis][index[axis]]
            pt.append(slo + (shi - slo) * rng.random())
        points.append(tuple(pt))
        axis = n - 1
        while axis >= 0:
            index[axis] += 1
            if index[axis] < counts[axis]:
                break
            index[axis] = 0
            axis -= 1
        if axis < 0:
            break
    return points


def _fiber_bounds(cell: Cell, t: tuple[float, ...]) -> tuple[float, float]:
    pad = t + (0.0,)  # x slot unused by t-only bound terms
    if cell.lower is not None:
        res = eval_term(cell.lower, pad, cell.ctx)
        lo = res.value
    else:
        lo = -math.inf
    if cell.upper is not None:
        res = eval_term(cell.upper, pad, cell.ctx)
        hi = res.value
    else:
        hi = math.inf
    return lo, hi


def _fiber_positions(plan: SamplePlan, rng: random.Random) -> list[float]:
    """Relative positions in (0, 1), per the plan's fiber strategy."""
    k = plan.fiber_count
    m = plan.boundary_margin
    if plan.fiber_strategy == "uniform":
        width = (1.0 - 2.0 * m) / k
        return [m + (i + rng.random()) * width for i in range(k)]
    # geometric: log-spaced offsets from the indicated boundary, jittered
    log_lo, log_hi = math.log(m), math.log(1.0 - m)
    width = (log_hi - log_lo) / k
    offs = [math.exp(log_lo + (i + rng.random()) * width) for i in range(k)]
    if plan.fiber_strategy == "geometric-toward-lower":
        return offs
    return [1.0 - o for o in offs]


def sample(cell: Cell, plan: SamplePlan) -> list[tuple[float, ...]]:
    """Deterministic interior samples of the cell under the plan."""
    rng = random.Random(plan.seed ^ 0x5EED)
    points: list[tuple[float, ...]] = []
    for t in _t_grid(cell, plan):
        lo, hi = _fiber_bounds(cell, t)
        if math.isinf(lo) and math.isinf(hi):
            lo, hi = -plan.unbounded_span, plan.unbounded_span
        elif math.isinf(hi):
            hi = lo + plan.unbounded_span
        elif math.isinf(lo):
            lo = hi - plan.unbounded_span
        if not lo < hi:
            raise DegenerateCellError(
                f"cell {cell.name}: fiber bounds cross at t={t} (lower={lo}, upper={hi})"
            )
        span = hi - lo
        for pos in _fiber_positions(plan, rng):
            x = lo + span * pos
            if cell.nonzero_fiber and x == 0.0:
                continue
            points.append(t + (x,))
    return points


def t_samples(points: Sequence[tuple[float, ...]]) -> list[tuple[float, ...]]:
    """Distinct parameter parts of a sample sequence, order-preserving."""
    seen: dict[tuple[float, ...], None] = {}
    for p in points:
        seen.setdefault(p[:-1], None)
    return list(seen)


def lift(cell: Cell, f: Term, plan: SamplePlan, name: Optional[str] = None) -> Cell:
    """The image cell {(t, f(t,x))}, with fiber bounds substituted through f.

    Requires f to be monotone in x on the samples (otherwise the image
    fibers would not be intervals with term bounds).
    """
    points = sample(cell, plan)
    ctx = cell.ctx
    direction = 0
    by_t: dict[tuple[float, ...], list[tuple[float, float]]] = {}
    for p in points:
        res = eval_term(f, p, ctx)
        if res.domain_flag:
            raise CellError(f"lift map hits a totalization convention at {p}")
        by_t.setdefault(p[:-1], []).append((p[-1], res.value))
    for vals in by_t.values():
        vals.sort()
        ys = [v for _, v in vals]
        inc = all(a <= b for a, b in zip(ys, ys[1:]))
        dec = all(a >= b for a, b in zip(ys, ys[1:]))
        if inc and not dec:
            d = 1
        elif dec and not inc:
            d = -1
        else:
            d = 0
        if d == 0 or (direction and d != direction):
            raise UnsupportedLiftError(
                f"lift map is not monotone in x on samples of {cell.name}"
            )
        direction = d

    def image(bound: Optional[Term]) -> Optional[Term]:
        if bound is None:
            return None
        return substitute(f, {ctx.x_index: bound})

    lo_img, hi_img = image(cell.lower), image(cell.upper)
    if direction < 0:
        lo_img, hi_img = hi_img, lo_img
    return Cell(
        name=name or f"{cell.name}^f",
        nvars=cell.nvars,
        t_box=cell.t_box,
        lower=lo_img,
        upper=hi_img,
        nonzero_fiber=False,
    )


def region_filter(
    scale_values_at,
    mode: tuple[str, float] | tuple[str, int, float],
    points: Sequence[tuple[float, ...]],
) -> list[tuple[float, ...]]:
    """Filter points by the asymptotic/bounded regime of a scale.

    mode ("gt", M) keeps points where |y_l| > M for every level l >= 1;
    mode ("le", l, M) keeps points where |y_l| <= M.  `scale_values_at`
    maps a point to the sequence (y_0..y_r) or None on breakdown
    (breakdown points are dropped).
    """
    if mode[0] == "gt":
        M = float(mode[1])
        if M <= 0:
            raise ValueError("threshold M must be positive")
        out = []
        for p in points:
            ys = scale_values_at(p)
            if ys is None:
                continue
            if all(abs(y) > M for y in ys[1:]):
                out.append(p)
        return out
    if mode[0] == "le":
        level, M = int(mode[1]), float(mode[2])
        if M <= 0:
            raise ValueError("threshold M must be positive")
        if level < 1:
            raise ValueError("bounded-regime level must be at least 1")
        out = []
        for p in points:
            ys = scale_values_at(p)
            if ys is None:
                continue
            if level >= len(ys):
                raise ValueError(f"level {level} exceeds scale depth {len(ys) - 1}")
            if abs(ys[level]) <= M:
                out.append(p)
        return out
    raise ValueError(f"unknown region mode {mode!r}")


@dataclass(frozen=True)
class SimpleCellReport:
    simple: bool
    reason: str


def simple_cell_check(cell: Cell, plan: SamplePlan) -> SimpleCellReport:
    """A cell is simple when its fibers are intervals (0, d_t) with d_t > 0."""
    if cell.lower is None or not is_zero_term(cell.lower):
        return SimpleCellReport(False, "lower fiber bound is not the zero term")
    if cell.upper is None:
        return SimpleCellReport(True, "fibers are (0, inf)")
    for t in _t_grid(cell, plan):
        val = eval_value(cell.upper, t + (0.0,))
        if not val > 0.0:
            return SimpleCellReport(False, f"upper bound not positive at t={t}")
    return SimpleCellReport(True, "lower bound is 0, upper bound positive on samples")
