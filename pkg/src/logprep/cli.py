"""Batch command surface: parse, classify, verify, similarity, rewrite, report.

Exit codes: 0 verified/success, 1 refuted, 2 invalid input, 3 inconclusive.
Runs are deterministic given the seed; a report document is always written
when an output path is given, including on refutation.  The environment
variable LOGPREP_WORKERS overrides the worker count used for sample
evaluation (sample batches are pure, so splitting them is safe).
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import documents as docs
from .cells import Cell, CellError, SamplePlan, plan_of_size, sample
from .classify import (
    CannotConstructError, NotLogAnalyticError, exp_number_bound, order_bound,
)
from .documents import DecodeError, load, read_term_file
from .grammar import ParseError, parse_term, print_term
from .preparation import (
    ERPreparingTuple, ExpFamily, GsaPreparedForm, InvalidInputError,
    LAPreparingTuple, NiceWitness, verify_er, verify_gsa, verify_heir,
    verify_la, verify_nice,
)
from .report import EXIT_CODES, EXIT_INVALID, VerificationReport, merge
from .rewrite import (
    center_dichotomy, collapse_la, collapse_la_log, eliminate_exp,
    log_of_prepared, reduce_order,
)
from .scales import LogScale, verify_scale
from .similarity import check_similar, search_delta
from .terms import VarContext, free_vars


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("LOGPREP_WORKERS", "1")))
    except ValueError:
        return 1


def _load_as(path: str, kind, what: str):
    entity = load(path)
    if not isinstance(entity, kind):
        raise InvalidInputError(f"{path} is not a {what} document")
    return entity


def _plan_from(args, cell: Cell) -> SamplePlan:
    return plan_of_size(
        args.samples,
        cell.nvars,
        seed=args.seed,
        fiber_strategy=args.fiber_strategy,
        boundary_margin=args.margin,
    )


def _write_report(rep: VerificationReport, out: Optional[str], command: str) -> None:
    rep.meta.setdefault("command", command)
    if out:
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
        docs.save(rep, out, extra={"generated_at": stamp})


def _finish(rep: VerificationReport, args, command: str) -> int:
    _write_report(rep, getattr(args, "out", None), command)
    print(f"verdict: {rep.verdict}")
    for check in rep.checks:
        print(f"  [{check.verdict}] {check.name}: {check.detail}")
    if rep.counterexamples:
        print(f"  counterexample: {rep.counterexamples[0]}")
    return EXIT_CODES[rep.verdict]


def _term_ctx(term) -> VarContext:
    fv = free_vars(term)
    return VarContext(max(fv) if fv else 0)


def _rewrite_finish(out, args, command: str) -> int:
    rep = merge([r for _, r in out.obligations])
    rep.meta["provenance"] = out.provenance
    rep.witnesses.update(out.scalars)
    _write_report(rep, getattr(args, "out", None), command)
    print(f"provenance: {out.provenance}")
    for name, term in out.outputs.items():
        print(f"  {name} = {print_term(term, _term_ctx(term))}")
    for name, value in out.scalars.items():
        print(f"  {name} = {value}")
    print(f"verdict: {rep.verdict}")
    return EXIT_CODES[rep.verdict]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="logprep",
        description="term engine and certificate verifier for "
        "logarithmic-exponential preparation data",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, cellarg=True):
        p.add_argument("--samples", type=int, default=10_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--margin", type=float, default=1e-3)
        p.add_argument(
            "--fiber-strategy",
            default="uniform",
            choices=["uniform", "geometric-toward-lower", "geometric-toward-upper"],
        )
        p.add_argument("--out", help="report output path")
        if cellarg:
            p.add_argument("--cell", required=True, help="cell document")

    p = sub.add_parser("parse", help="parse a term file and echo it back")
    p.add_argument("file")
    p.add_argument("--nvars", type=int)

    p = sub.add_parser("classify", help="order / exp-number upper bounds")
    csub = p.add_subparsers(dest="what", required=True)
    c1 = csub.add_parser("order")
    c1.add_argument("file")
    c1.add_argument("--nvars", type=int)
    c2 = csub.add_parser("expnum")
    c2.add_argument("file")
    c2.add_argument("--family", required=True)
    c2.add_argument("--cell")
    c2.add_argument("--nvars", type=int)
    c2.add_argument("--samples", type=int, default=200)
    c2.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("verify", help="verify a certificate document")
    vsub = p.add_subparsers(dest="what", required=True)
    v = vsub.add_parser("scale")
    v.add_argument("doc")
    common(v)
    v = vsub.add_parser("gsa")
    v.add_argument("doc")
    v.add_argument("--term", required=True)
    common(v)
    v = vsub.add_parser("la")
    v.add_argument("doc")
    v.add_argument("--term", required=True)
    common(v)
    v = vsub.add_parser("er")
    v.add_argument("doc")
    v.add_argument("--term", required=True)
    v.add_argument("--family", required=True)
    v.add_argument("--base-family")
    common(v)
    v = vsub.add_parser("heir")
    v.add_argument("--g", required=True, help="term file for the candidate heir")
    v.add_argument("--scale", required=True)
    v.add_argument("--level", type=int, required=True)
    common(v)
    v = vsub.add_parser("nice")
    v.add_argument("--g", required=True)
    v.add_argument("--witness", required=True)
    common(v)

    p = sub.add_parser("similarity", help="ratio-pinch checks and witness search")
    ssub = p.add_subparsers(dest="what", required=True)
    s = ssub.add_parser("check")
    s.add_argument("--f", required=True)
    s.add_argument("--g", required=True)
    s.add_argument("--delta", type=float, required=True)
    common(s)
    s = ssub.add_parser("search")
    s.add_argument("--f", required=True)
    s.add_argument("--g", required=True)
    common(s)

    p = sub.add_parser("rewrite", help="constructive transformations")
    rsub = p.add_subparsers(dest="what", required=True)
    r = rsub.add_parser("collapse")
    r.add_argument("doc", help="la-tuple document")
    r.add_argument("--term", required=True)
    r.add_argument("--log-form", action="store_true")
    common(r)
    r = rsub.add_parser("reduce-order")
    r.add_argument("doc", help="scale document")
    r.add_argument("--xi", required=True, help="term file")
    r.add_argument("--delta", type=float, required=True)
    r.add_argument("--level", type=int, default=0)
    common(r)
    r = rsub.add_parser("eliminate-exp")
    r.add_argument("--F", required=True, help="term file over the image slots")
    r.add_argument("--theta", required=True)
    r.add_argument("--g", nargs="*", default=[])
    r.add_argument("--h", nargs="+", required=True)
    r.add_argument("--delta", type=float, required=True)
    common(r)
    r = rsub.add_parser("log-prep")
    r.add_argument("doc", help="gsa-form document over the image slots")
    r.add_argument("--term", required=True, help="prepared function over the image slots")
    r.add_argument("--beta", nargs="+", required=True)
    r.add_argument("--z", required=True)
    r.add_argument("--hl-index", type=int, required=True)
    common(r)
    r = rsub.add_parser("dichotomy")
    r.add_argument("--combinator", required=True)
    r.add_argument("--plain-form", nargs="*", default=[])
    r.add_argument("--plain-term", nargs="*", default=[])
    r.add_argument("--log-form", nargs="*", default=[])
    r.add_argument("--log-term", nargs="*", default=[])
    r.add_argument("--beta", nargs="+", required=True)
    r.add_argument("--z", required=True)
    r.add_argument("--hl-index", type=int, required=True)
    common(r)

    p = sub.add_parser("report", help="report utilities")
    msub = p.add_subparsers(dest="what", required=True)
    m = msub.add_parser("merge")
    m.add_argument("reports", nargs="+")
    m.add_argument("--out", required=True)
    return ap


def _read_term_arg(path: str, nvars: Optional[int]):
    return read_term_file(path, nvars)


def run(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else 0
    try:
        return _dispatch(args)
    except (DecodeError, ParseError, InvalidInputError, CellError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NotLogAnalyticError as exc:
        print(f"not log-analytic: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CannotConstructError as exc:
        print(f"cannot construct: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_INVALID


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "parse":
        term, ctx = _read_term_arg(args.file, args.nvars)
        print(print_term(term, ctx))
        return 0

    if cmd == "classify":
        term, ctx = _read_term_arg(args.file, args.nvars)
        if args.what == "order":
            ob = order_bound(term)
            print(f"log-analytic order at most {ob.bound}")
            return 0
        family = _load_as(args.family, ExpFamily, "family")
        cell = _load_as(args.cell, Cell, "cell") if args.cell else None
        plan = (
            plan_of_size(args.samples, cell.nvars, seed=args.seed) if cell else None
        )
        eb = exp_number_bound(term, family, cell, plan)
        print(f"exponential number at most {eb.bound} with respect to {family.name}")
        for node, member in eb.matched_subterms.items():
            print(f"  matched {print_term(node, family.ctx)} -> {member}")
        return 0

    if cmd == "verify":
        return _dispatch_verify(args)
    if cmd == "similarity":
        return _dispatch_similarity(args)
    if cmd == "rewrite":
        return _dispatch_rewrite(args)

    if cmd == "report" and args.what == "merge":
        reports = [_load_as(p, VerificationReport, "report") for p in args.reports]
        merged = merge(reports)
        docs.save(
            merged,
            args.out,
            extra={
                "generated_at": datetime.datetime.now(
                    datetime.timezone.utc
                ).isoformat()
            },
        )
        print(f"verdict: {merged.verdict}")
        return EXIT_CODES[merged.verdict]
    raise InvalidInputError(f"unknown command {cmd!r}")


def _dispatch_verify(args) -> int:
    cell = _load_as(args.cell, Cell, "cell")
    plan = _plan_from(args, cell)
    what = args.what
    if what == "scale":
        scale = _load_as(args.doc, LogScale, "scale")
        rep = verify_scale(scale, cell, plan)
        return _finish(rep, args, "verify scale")
    if what == "gsa":
        form = _load_as(args.doc, GsaPreparedForm, "prepared form")
        term, _ = _read_term_arg(args.term, form.nvars)
        rep = verify_gsa(form, term, cell, plan, args.tol)
        return _finish(rep, args, "verify gsa")
    if what == "la":
        tup = _load_as(args.doc, LAPreparingTuple, "preparing tuple")
        term, _ = _read_term_arg(args.term, tup.nvars)
        rep = verify_la(tup, term, cell, plan, args.tol)
        return _finish(rep, args, "verify la")
    if what == "er":
        tup = _load_as(args.doc, ERPreparingTuple, "preparing tuple")
        term, _ = _read_term_arg(args.term, tup.nvars)
        family = _load_as(args.family, ExpFamily, "family")
        base = _load_as(args.base_family, ExpFamily, "family") if args.base_family else None
        rep = verify_er(tup, term, cell, family, plan, args.tol, base)
        return _finish(rep, args, "verify er")
    if what == "heir":
        scale = _load_as(args.scale, LogScale, "scale")
        g, _ = _read_term_arg(args.g, scale.nvars)
        rep = verify_heir(g, cell, scale, args.level, plan, args.tol)
        return _finish(rep, args, "verify heir")
    if what == "nice":
        witness = _load_as(args.witness, NiceWitness, "construction witness")
        g, _ = _read_term_arg(args.g, witness.nvars)
        rep = verify_nice(g, cell, witness, plan, args.tol)
        return _finish(rep, args, "verify nice")
    raise InvalidInputError(f"unknown verify target {what!r}")


def _dispatch_similarity(args) -> int:
    cell = _load_as(args.cell, Cell, "cell")
    plan = _plan_from(args, cell)
    f, _ = _read_term_arg(args.f, cell.nvars)
    g, _ = _read_term_arg(args.g, cell.nvars)
    points = sample(cell, plan)
    if args.what == "check":
        rep = check_similar(f, g, points, args.delta, cell.ctx)
        return _finish(rep, args, "similarity check")
    witness, rep = search_delta(f, g, points, cell.ctx)
    if witness is not None:
        print(f"delta = {witness.delta}")
    return _finish(rep, args, "similarity search")


def _dispatch_rewrite(args) -> int:
    cell = _load_as(args.cell, Cell, "cell")
    plan = _plan_from(args, cell)
    what = args.what
    if what == "collapse":
        tup = _load_as(args.doc, LAPreparingTuple, "preparing tuple")
        term, _ = _read_term_arg(args.term, tup.nvars)
        fn = collapse_la_log if args.log_form else collapse_la
        out = fn(tup, term, cell, plan, args.tol)
        return _rewrite_finish(out, args, "rewrite collapse")
    if what == "reduce-order":
        scale = _load_as(args.doc, LogScale, "scale")
        xi, _ = _read_term_arg(args.xi, scale.nvars)
        out = reduce_order(scale, xi, args.delta, cell, plan, args.level, args.tol)
        return _rewrite_finish(out, args, "rewrite reduce-order")
    if what == "eliminate-exp":
        k, l = len(args.g), len(args.h)
        arity = k + l + 1
        F, _ = _read_term_arg(args.F, arity - 1)
        theta, _ = _read_term_arg(args.theta, k + l - 1)
        g_terms = [_read_term_arg(p, cell.nvars)[0] for p in args.g]
        h_terms = [_read_term_arg(p, cell.nvars)[0] for p in args.h]
        out = eliminate_exp(
            F, g_terms, h_terms, theta, args.delta, cell, plan, args.tol
        )
        return _rewrite_finish(out, args, "rewrite eliminate-exp")
    if what == "log-prep":
        form = _load_as(args.doc, GsaPreparedForm, "prepared form")
        F_term, _ = _read_term_arg(args.term, form.nvars)
        beta = [_read_term_arg(p, cell.nvars)[0] for p in args.beta]
        z, _ = _read_term_arg(args.z, cell.nvars)
        out = log_of_prepared(
            form, F_term, beta, z, args.hl_index, cell, plan, args.tol
        )
        return _rewrite_finish(out, args, "rewrite log-prep")
    if what == "dichotomy":
        nslots = len(args.plain_form) + len(args.log_form)
        combinator, _ = _read_term_arg(args.combinator, max(nslots - 1, 0))
        if len(args.plain_form) != len(args.plain_term) or len(args.log_form) != len(
            args.log_term
        ):
            raise InvalidInputError("forms and terms must pair up")
        beta = [_read_term_arg(p, cell.nvars)[0] for p in args.beta]
        nv = len(beta)
        plain = [
            (_load_as(fp, GsaPreparedForm, "prepared form"), _read_term_arg(tp, nv)[0])
            for fp, tp in zip(args.plain_form, args.plain_term)
        ]
        logged = [
            (_load_as(fp, GsaPreparedForm, "prepared form"), _read_term_arg(tp, nv)[0])
            for fp, tp in zip(args.log_form, args.log_term)
        ]
        z, _ = _read_term_arg(args.z, cell.nvars)
        out = center_dichotomy(
            combinator, plain, logged, beta, z, args.hl_index, cell, plan, args.tol
        )
        return _rewrite_finish(out, args, "rewrite dichotomy")
    raise InvalidInputError(f"unknown rewrite {what!r}")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
