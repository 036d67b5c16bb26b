#!/usr/bin/env python3
"""Write the worked-example fixture files into fixtures/.

Idempotent: encodings are deterministic, so reruns reproduce identical
bytes.  The scale used by the la-tuple fixture is referenced by filename
to exercise the workspace cross-reference model; everything else embeds
its sub-entities inline.
"""

from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from logprep import examples as ex  # noqa: E402
from logprep.documents import dumps  # noqa: E402
from logprep.grammar import print_term  # noqa: E402
from logprep.terms import VarContext  # noqa: E402

FIXTURES = ROOT / "fixtures"


def write(name: str, data: str) -> None:
    path = FIXTURES / name
    path.write_text(data)
    print(f"wrote {path.relative_to(ROOT)}")


def term_file(name: str, term, nvars: int) -> None:
    write(name, print_term(term, VarContext(nvars)) + "\n")


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)

    # plain term files
    from logprep.grammar import parse_term

    nested = parse_term(
        "arctan(log(max(log(t1^(4/1) + log(x^(2/1) + 2)), 1)))", VarContext(1)
    )
    term_file("arctan_nested_logs.term", nested, 1)
    term_file("exp_square.term", ex.exp_square_term(), 0)
    term_file("log_of_exp_square.term", ex.log_of_exp_square_term(), 0)
    term_file("double_exp_square.term", ex.double_exp_square_term(), 0)
    term_file("exp_gap_prepared.term", ex.exp_gap_prepared_term(), 1)
    term_file("linear_exp.term", ex.linear_exp_term(), 1)
    term_file("recip_log_ratio.term", ex.recip_log_ratio_term(), 1)
    term_file("guarded_ratio_F.term", ex.guarded_ratio_F(), 3)
    term_file("alpha.term", ex.alpha_term(), 1)
    term_file("heir_candidate.term", ex.heir_candidate(), 1)
    term_file("center_shift.term", ex.center_shift_target(), 1)

    # entity documents
    write("exp_gap_cell.json", dumps(ex.exp_gap_cell()))
    write("exp_gap_scale.json", dumps(ex.exp_gap_scale()))
    write("exp_gap_scale_alt.json", dumps(ex.exp_gap_scale_alt()))
    write("exp_gap_scale_bad.json", dumps(ex.exp_gap_scale_bad()))
    write(
        "exp_gap_la_tuple.json",
        dumps(ex.exp_gap_la_tuple(scale_ref="exp_gap_scale.json")),
    )
    broken = ex.exp_gap_la_tuple(scale_ref="exp_gap_scale.json")
    from dataclasses import replace
    from fractions import Fraction

    broken = replace(broken, name="exp_gap_la_broken", q=(Fraction(1), Fraction(-1)))
    write("exp_gap_la_broken.json", dumps(broken))

    write("family_single_exp.json", dumps(ex.family_single_exp()))
    write("family_double_exp.json", dumps(ex.family_double_exp()))
    write("linear_exp_cell.json", dumps(ex.linear_exp_cell()))
    write("linear_exp_family.json", dumps(ex.linear_exp_family()))
    write("linear_exp_er_tuple.json", dumps(ex.linear_exp_er_tuple()))
    write("psi_exp_cell.json", dumps(ex.psi_exp_cell()))
    write("wide_log_cell.json", dumps(ex.wide_log_cell()))
    write("wide_log_scale.json", dumps(ex.wide_log_scale()))
    write("unit_window_cell.json", dumps(ex.unit_window_cell()))
    write("pinch_cell.json", dumps(ex.pinch_cell()))
    write("center_shift_witness.json", dumps(ex.center_shift_witness()))
    write("simple_gsa_form.json", dumps(ex.simple_gsa_form()))
    term_file("simple_gsa.term", ex.simple_gsa_term(), 0)


if __name__ == "__main__":
    main()
