import json
from pathlib import Path

import pytest

from logprep import examples as ex
from logprep.documents import (
    DecodeError, decode, dumps, encode, infer_nvars, load, read_term_file, save,
)
from logprep.preparation import LAPreparingTuple
from logprep.report import VerificationReport
from logprep.scales import LogScale

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


ENTITIES = [
    ex.exp_gap_cell(),
    ex.exp_gap_scale(),
    ex.exp_gap_scale_alt(),
    ex.simple_gsa_form(),
    ex.exp_gap_la_tuple(),
    ex.linear_exp_er_tuple(),
    ex.linear_exp_family(),
    ex.center_shift_witness(),
]


class TestRoundTrip:
    @pytest.mark.parametrize("entity", ENTITIES, ids=lambda e: type(e).__name__)
    def test_entity_roundtrip(self, entity):
        assert decode(encode(entity)) == entity

    def test_document_roundtrip_on_fixture_files(self):
        for path in sorted(FIXTURES.glob("*.json")):
            doc = json.loads(path.read_text())
            entity = decode(doc, workspace=FIXTURES)
            again = encode(entity)
            if isinstance(entity, VerificationReport):
                continue
            assert again == doc, path.name

    def test_scale_reference_resolves(self):
        tup = load(FIXTURES / "exp_gap_la_tuple.json")
        assert isinstance(tup, LAPreparingTuple)
        assert tup.scale == ex.exp_gap_scale()
        assert tup.scale_ref == "exp_gap_scale.json"

    def test_report_roundtrip(self, tmp_path):
        rep = VerificationReport()
        rep.add("unit", "verified", "ok")
        rep.add("pointwise", "refuted", "off", counterexample=(0.5, 1.0))
        rep.witnesses["delta"] = 2.0
        rep.meta["seed"] = 7
        save(rep, tmp_path / "r.json", extra={"generated_at": "2026-01-01T00:00:00"})
        back = load(tmp_path / "r.json")
        assert isinstance(back, VerificationReport)
        assert back.verdict == "refuted"
        assert back.checks[1].counterexample == (0.5, 1.0)
        assert back.witnesses["delta"] == 2.0


class TestErrors:
    def test_missing_center_names_path(self):
        doc = encode(ex.exp_gap_scale())
        del doc["center"]
        with pytest.raises(DecodeError) as err:
            decode(doc)
        assert "center" in str(err.value)

    def test_unknown_schema(self):
        doc = encode(ex.exp_gap_cell())
        doc["schema"] = "logprep/99"
        with pytest.raises(DecodeError) as err:
            decode(doc)
        assert "schema" in str(err.value)

    def test_unknown_kind(self):
        with pytest.raises(DecodeError):
            decode({"schema": "logprep/1", "kind": "mystery"})

    def test_graph_fiber_cells_rejected(self):
        doc = encode(ex.exp_gap_cell())
        doc["lower"] = {"graph": "x == inv(t1)"}
        with pytest.raises(DecodeError) as err:
            decode(doc)
        assert "graph-fiber" in str(err.value)

    def test_bad_term_names_path(self):
        doc = encode(ex.exp_gap_scale())
        doc["center"] = ["inv(1 + t1)", "log("]
        with pytest.raises(DecodeError) as err:
            decode(doc)
        assert "center[1]" in str(err.value)

    def test_missing_scale_reference(self, tmp_path):
        doc = encode(ex.exp_gap_la_tuple())
        doc["scale"] = "nowhere.json"
        (tmp_path / "t.json").write_text(json.dumps(doc))
        with pytest.raises(DecodeError) as err:
            load(tmp_path / "t.json")
        assert "nowhere" in str(err.value)


class TestTermFiles:
    def test_infer_nvars(self):
        assert infer_nvars("x + t3*t1") == 3
        assert infer_nvars("x") == 0

    def test_read_fixture_term(self):
        term, ctx = read_term_file(FIXTURES / "arctan_nested_logs.term")
        assert ctx.n == 1

    def test_deterministic_encoding(self):
        a = dumps(ex.exp_gap_la_tuple())
        b = dumps(ex.exp_gap_la_tuple())
        assert a == b
