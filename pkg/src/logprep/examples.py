"""Worked-example entities used by the fixture files, scripts and tests.

The recurring configuration is a one-parameter cell squeezed between two
exponentially small shifts of 1/(1+t), which carries a depth-1 scale with
center (1/(1+t), -1/t) and a companion whose second component is shifted
by exp(-1/t); a second family of fixtures exercises the exponential
certificates (x * exp(t)), the guarded ratio construction, and a wide
log-range cell for threshold calibration.
"""

from __future__ import annotations

from fractions import Fraction

from .cells import Cell
from .preparation import (
    Construction, ERPreparingTuple, ExpFamily, GsaPreparedForm, HeirMember,
    LAPreparingTuple, MemberRef, NiceWitness, UnitSpec,
)
from .scales import LogScale, THETA_ZERO
from .terms import (
    Abs, Add, Atom, Const, Exp, Guarded, Inv, Log, Mul, Neg, Pow, Term,
    TruncLog, Var, VarContext, const,
)

T1 = Var(0)
ONE = const(1)
ZERO = const(0)


def unit_const_one(name: str = "unit_one") -> UnitSpec:
    return UnitSpec(name, 0, (((), Fraction(1)),))


def unit_affine(slope: Fraction, name: str = "unit_affine") -> UnitSpec:
    """v(z) = 1 + slope * z over one variable."""
    return UnitSpec(name, 1, (((0,), Fraction(1)), ((1,), slope)))


# --- the exp-gap cell and its scales -----------------------------------------


def exp_neg_inv_t() -> Term:
    return Exp(Neg(Inv(T1)))


def theta0_term() -> Term:
    return Inv(Add(ONE, T1))


def theta1_term() -> Term:
    return Neg(Inv(T1))


def theta1_shifted_term() -> Term:
    return Add(Neg(Inv(T1)), exp_neg_inv_t())


def exp_gap_cell(
    t_lo: Fraction = Fraction(1, 20), t_hi: Fraction = Fraction(19, 20)
) -> Cell:
    lower = Add(
        theta0_term(),
        Exp(Add(Mul(const(-2), Inv(T1)), Mul(const(2), exp_neg_inv_t()))),
    )
    upper = Add(theta0_term(), exp_neg_inv_t())
    return Cell(
        name="exp_gap",
        nvars=1,
        t_box=((t_lo, t_hi),),
        lower=lower,
        upper=upper,
        nonzero_fiber=True,
    )


def exp_gap_scale() -> LogScale:
    return LogScale(
        name="exp_gap_scale",
        nvars=1,
        r=1,
        center=(theta0_term(), theta1_term()),
        sign_pattern=("+", "-"),
        epsilon_witnesses=(Fraction(1, 2), Fraction(1, 2)),
    )


def exp_gap_scale_alt() -> LogScale:
    return LogScale(
        name="exp_gap_scale_alt",
        nvars=1,
        r=1,
        center=(theta0_term(), theta1_shifted_term()),
        sign_pattern=("+", "-"),
        epsilon_witnesses=(Fraction(1, 2), Fraction(1, 2)),
    )


def exp_gap_scale_bad() -> LogScale:
    """Mutated second center component (sign flipped): must be refuted."""
    return LogScale(
        name="exp_gap_scale_bad",
        nvars=1,
        r=1,
        center=(theta0_term(), Inv(T1)),
        sign_pattern=("+", "-"),
    )


def companion_zero_scale() -> LogScale:
    """Depth-1 recurrence data with first center 0 on the exp-gap cell.

    Its values are (x, log x + 1/t); the contraction condition of a full
    scale does not hold for it, but the log-step bracket only needs the
    recurrence values and sign constancy.
    """
    return LogScale(
        name="exp_gap_companion",
        nvars=1,
        r=1,
        center=(ZERO, theta1_term()),
        sign_pattern=("+", "+"),
    )


def scale_y_terms(scale: LogScale) -> list[Term]:
    x = Var(scale.ctx.x_index)
    ys = [Add(x, Neg(scale.center[0]))]
    for j in range(1, scale.r + 1):
        ys.append(Add(Log(Abs(ys[j - 1])), Neg(scale.center[j])))
    return ys


def exp_gap_prepared_term() -> Term:
    """|y_0|^(1/2) |y_1|^(-1) (1 + y_0/3) over the exp-gap scale."""
    y0, y1 = scale_y_terms(exp_gap_scale())
    return Mul(
        Mul(Pow(y0, Fraction(1, 2)), Pow(y1, Fraction(-1))),
        Add(ONE, Mul(const(Fraction(1, 3)), y0)),
    )


def exp_gap_la_tuple(scale_ref: str | None = None) -> LAPreparingTuple:
    return LAPreparingTuple(
        name="exp_gap_la",
        nvars=1,
        r=1,
        scale=exp_gap_scale(),
        scale_ref=scale_ref,
        a=ONE,
        q=(Fraction(1, 2), Fraction(-1)),
        unit=unit_affine(Fraction(1, 3), "exp_gap_unit"),
        b=(ONE,),
        P=((Fraction(1), Fraction(0)),),
    )


def heir_candidate() -> Term:
    return exp_neg_inv_t()


def center_shift_target() -> Term:
    return theta1_shifted_term()


def center_shift_witness() -> NiceWitness:
    """-1/t + exp(-1/t) as an exp-free combinator over one heir member."""
    tree = Construction(
        combinator=Add(Neg(Var(0)), Var(1)),
        args=(Inv(T1), MemberRef("exp_neg_inv_t")),
    )
    return NiceWitness(
        name="center_shift",
        nvars=1,
        tree=tree,
        members={"exp_neg_inv_t": HeirMember(heir_candidate(), exp_gap_scale(), 1)},
    )


# --- intro-style exponential-depth fixtures -----------------------------------


def square_plus_one() -> Term:
    return Add(Pow(Var(0), Fraction(2)), ONE)


def exp_square_term() -> Term:
    return Exp(square_plus_one())


def log_of_exp_square_term() -> Term:
    return Log(Add(Exp(square_plus_one()), ONE))


def double_exp_square_term() -> Term:
    return Exp(Exp(square_plus_one()))


def family_single_exp() -> ExpFamily:
    return ExpFamily("single_exp", 0, {"e1": exp_square_term()})


def family_double_exp() -> ExpFamily:
    return ExpFamily(
        "double_exp",
        0,
        {"e1": exp_square_term(), "e2": double_exp_square_term()},
    )


# --- the x * exp(t) certificate -----------------------------------------------


def linear_exp_cell() -> Cell:
    return Cell(
        name="linear_exp",
        nvars=1,
        t_box=((Fraction(0), Fraction(1)),),
        lower=ZERO,
        upper=ONE,
        nonzero_fiber=True,
    )


def linear_exp_term() -> Term:
    return Mul(Var(1), Exp(T1))


def linear_exp_family() -> ExpFamily:
    return ExpFamily(
        "linear_exp_family",
        1,
        {"one": ONE, "exp_t": Exp(T1)},
        witnesses={"exp_t": {"exp_t": Fraction(1)}, "one": {}},
    )


def zero_center_unit_scale(nvars: int, name: str = "plain_x") -> LogScale:
    """The depth-0 scale y_0 = x with zero center and positive sign."""
    return LogScale(
        name=name,
        nvars=nvars,
        r=0,
        center=(ZERO,),
        sign_pattern=("+",),
        epsilon_witnesses=(THETA_ZERO,),
    )


def linear_exp_er_tuple() -> ERPreparingTuple:
    scale = zero_center_unit_scale(1)
    zero = ERPreparingTuple(name="zero", nvars=1, level=-1)
    c_tuple = ERPreparingTuple(
        name="exponent_t",
        nvars=1,
        level=0,
        r=0,
        scale=scale,
        a=T1,
        q=(Fraction(0),),
        unit=unit_const_one(),
        b=(),
        P=(),
        exp_c=("one", zero),
        exp_d=(),
    )
    return ERPreparingTuple(
        name="linear_exp",
        nvars=1,
        level=1,
        r=0,
        scale=scale,
        a=ONE,
        q=(Fraction(1),),
        unit=unit_const_one(),
        b=(),
        P=(),
        exp_c=("exp_t", c_tuple),
        exp_d=(),
    )


# --- the guarded ratio construction -------------------------------------------


def alpha_term() -> Term:
    """exp(-1/t) / (1 - exp(-1/t)), positive and flat at 0+."""
    e = exp_neg_inv_t()
    return Mul(e, Inv(Add(ONE, Neg(e))))


def recip_log_ratio_term() -> Term:
    """-1/log(x/(1+x)) - t, the function the guarded construction rebuilds."""
    phi = Mul(Var(1), Inv(Add(ONE, Var(1))))
    return Add(Neg(Inv(Log(phi))), Neg(T1))


def guarded_ratio_F() -> Term:
    """Exp-free reassembly over slots (w1, w2, w3, w4) = (t, a, log a, x).

    Inside the window where x/a and 1/(1+x) sit in [1/2, 3/2] both log
    windows are live and the guarded value equals -1/log(x/(1+x)) - t.
    """
    w1, w2, w3, w4 = Var(0), Var(1), Var(2), Var(3)
    half, three_half = const(Fraction(1, 2)), const(Fraction(3, 2))
    ratio = Mul(w4, Inv(w2))
    recip = Inv(Add(ONE, w4))
    u = Add(Add(TruncLog(Fraction(2), ratio), TruncLog(Fraction(2), recip)), w3)
    guard = (
        Atom(">", w2, ZERO),
        Atom(">", w4, ZERO),
        Atom(">", ratio, half),
        Atom("<", ratio, three_half),
        Atom(">", recip, half),
        Atom("<", recip, three_half),
        Atom("!=", u, ZERO),
    )
    return Guarded(((guard, Add(Neg(Inv(u)), Neg(w1))),))


def psi_exp_cell(
    t_lo: Fraction = Fraction(1, 50), t_hi: Fraction = Fraction(1, 10)
) -> Cell:
    """Fibers (a(t), 1.05 a(t)) hugging the zero set of the ratio function."""
    return Cell(
        name="psi_exp",
        nvars=1,
        t_box=((t_lo, t_hi),),
        lower=alpha_term(),
        upper=Mul(const(Fraction(21, 20)), alpha_term()),
        nonzero_fiber=True,
    )


def pinch_cell(
    t_lo: Fraction = Fraction(1, 20), t_hi: Fraction = Fraction(3, 5)
) -> Cell:
    """Fibers (e^(-3/t), 2 e^(-3/t)): x * |y_1| is pinched by t e^(-3/t).

    The fiber sits at 0 rather than on top of an order-1 center so the
    exponentially small coordinates stay exactly representable.
    """
    gap = Exp(Mul(const(-3), Inv(T1)))
    return Cell(
        name="pinch",
        nvars=1,
        t_box=((t_lo, t_hi),),
        lower=gap,
        upper=Mul(const(2), gap),
        nonzero_fiber=True,
    )


def pinch_scale() -> LogScale:
    """Zero first center, -1/t second: valid on the pinch cell."""
    return LogScale(
        name="pinch_scale",
        nvars=1,
        r=1,
        center=(ZERO, theta1_term()),
        sign_pattern=("+", "-"),
    )


def pinch_psi() -> Term:
    return Mul(T1, Exp(Mul(const(-3), Inv(T1))))


# --- calibration cells ---------------------------------------------------------


def wide_log_cell() -> Cell:
    """One fiber spanning log values from below 1 up to 45."""
    return Cell(
        name="wide_log",
        nvars=0,
        t_box=(),
        lower=const(2),
        upper=const(Fraction(35_000_000_000_000_000_000)),
        nonzero_fiber=True,
    )


def wide_log_scale() -> LogScale:
    return LogScale(
        name="wide_log_scale",
        nvars=0,
        r=1,
        center=(ZERO, ZERO),
        sign_pattern=("+", "+"),
    )


def unit_window_cell() -> Cell:
    """The fiber (1, 2) used by the exp-elimination instance."""
    return Cell(
        name="unit_window",
        nvars=0,
        t_box=(),
        lower=ONE,
        upper=const(2),
        nonzero_fiber=True,
    )


def sum_slot_F() -> Term:
    """F(y_1, z) = z + y_1 over the image slots (h-last, z)."""
    return Add(Var(1), Var(0))


def simple_gsa_form() -> GsaPreparedForm:
    """x (1 + x/2) prepared with zero center over the unit fiber."""
    return GsaPreparedForm(
        name="simple_gsa",
        nvars=0,
        theta=ZERO,
        a=ONE,
        q=Fraction(1),
        unit=unit_affine(Fraction(1, 2), "simple_gsa_unit"),
        b=(ONE,),
        p=(Fraction(1),),
        side="above",
    )


def simple_gsa_term() -> Term:
    x = Var(0)
    return Mul(x, Add(ONE, Mul(const(Fraction(1, 2)), x)))
