import io
import json
import subprocess
import sys

import pytest

from bicheck import fixtures
from bicheck.cli import resolve_spec, run
from bicheck.report import EXIT_FINDINGS, EXIT_INPUT, EXIT_OK, EXIT_RESOURCE, exit_status, finding_line

QUEUES = str(fixtures.path("queues.bi"))
RBQ = str(fixtures.path("queues_global_rbq.bi"))
BQ = str(fixtures.path("queues_global_bq.bi"))


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def call_json(*argv):
    code, out, err = call(*argv, "--format", "json")
    return code, json.loads(out), err


class TestCheck:
    def test_strict_queues_fail(self):
        code, out, err = call("check", QUEUES)
        assert code == EXIT_FINDINGS
        assert err == ""
        fails = [line for line in out.splitlines() if line.startswith("[Fails]")]
        assert len(fails) == 2
        assert out.rstrip().endswith("overall: NonConformant")

    def test_relaxed_queues_conform(self):
        code, out, _ = call("check", QUEUES, "--relax=virtual-ops,abstract-classes")
        assert code == EXIT_OK
        assert "[Lifted] rule 2 / Applicability  BQueue.join vs Queue" in out
        assert "[AcceptedByRelaxation]" in out
        assert out.rstrip().endswith("overall: Conformant")

    def test_json_fields(self):
        code, doc, _ = call_json("check", QUEUES, "--mode", "blocking")
        assert code == EXIT_FINDINGS
        assert set(doc) == {"version", "command", "spec", "config", "findings", "divergence", "errors", "overall"}
        assert doc["version"] == "1.0"
        assert doc["config"] == {"mode": "blocking", "relax": [], "stateCap": 1_000_000}
        (appl,) = [f for f in doc["findings"] if f["kind"] == "Applicability" and f["verdict"] == "Fails"]
        assert appl["subclass"] == "BQueue" and appl["op"] == "join"
        assert appl["witness"]["item?"] in ("a", "b")
        assert appl["witness"]["items"].count(",") == 2

    def test_text_and_json_carry_the_same_findings(self):
        _, text, _ = call("check", QUEUES)
        _, doc, _ = call_json("check", QUEUES)
        assert text.splitlines()[1:-1] == [finding_line(f) for f in doc["findings"]]

    @pytest.mark.parametrize("fmt", ["text", "json"])
    def test_output_is_byte_identical_across_runs(self, fmt):
        assert call("check", QUEUES, "--format", fmt) == call("check", QUEUES, "--format", fmt)

    def test_exit_status_is_recoverable_from_the_json(self):
        for argv in (("check", QUEUES), ("check", QUEUES, "--relax=abstract-classes,virtual-ops"),
                     ("lint", RBQ, "--strict"), ("trace", RBQ, "BQueue", "RBQueue")):
            code, doc, _ = call_json(*argv)
            assert exit_status(doc) == code

    def test_unknown_relaxation_is_a_usage_error(self, capsys):
        with pytest.raises(SystemExit) as info:
            run(["check", QUEUES, "--relax=everything"])
        assert info.value.code == 2
        assert "unknown relaxation" in capsys.readouterr().err

    def test_dump_alongside_check(self, tmp_path):
        code, _, _ = call("check", QUEUES, "--dump-relations", str(tmp_path))
        assert code == EXIT_FINDINGS
        assert (tmp_path / "RBQueue.reset.rel").exists()


class TestErrors:
    def test_parse_error_reports_a_span(self, tmp_path):
        bad = tmp_path / "bad.bi"
        bad.write_text("class A {\n  var x : int 3;\n}\n")
        code, doc, err = call_json("check", str(bad))
        assert code == EXIT_INPUT
        (e,) = doc["errors"]
        assert e["category"] == "parse"
        assert e["span"]["startLine"] == 2
        assert err.startswith("bicheck: error:")

    def test_structural_error(self, tmp_path):
        bad = tmp_path / "override.bi"
        bad.write_text("class A { var x : int 0..1; override op f() { x' = x } }\n")
        code, doc, _ = call_json("check", str(bad))
        assert code == EXIT_INPUT
        assert doc["errors"][0]["category"] == "structural"
        assert doc["errors"][0]["rule"] == "NothingToOverride"

    def test_missing_file(self, tmp_path):
        code, doc, _ = call_json("lint", str(tmp_path / "nowhere.bi"))
        assert code == EXIT_INPUT
        assert doc["errors"][0]["category"] == "input"

    def test_state_cap_is_a_resource_error(self):
        code, doc, err = call_json("check", QUEUES, "--state-cap", "20")
        assert code == EXIT_RESOURCE
        assert doc["errors"][0]["category"] == "resource"
        assert "StateSpaceTooLarge" in err

    def test_depth_over_the_cap_is_a_resource_error(self):
        code, doc, _ = call_json("trace", RBQ, "BQueue", "RBQueue", "--depth", "7")
        assert code == EXIT_RESOURCE
        assert "DepthTooLarge" in doc["errors"][0]["message"]

    def test_unknown_class(self):
        code, _, err = call("trace", RBQ, "BQueue", "Stack")
        assert code == EXIT_INPUT
        assert "Stack" in err

    def test_abstract_class_cannot_be_traced(self):
        code, _, _ = call("trace", QUEUES, "Queue", "BQueue")
        assert code == EXIT_INPUT


class TestLint:
    def test_warning_does_not_fail(self):
        code, out, _ = call("lint", RBQ)
        assert code == EXIT_OK
        assert out.splitlines()[1].startswith("[Warning] freeness  constraint on RBQueue")

    def test_strict_turns_it_into_an_error(self):
        code, doc, _ = call_json("lint", RBQ, "--strict")
        assert code == EXIT_FINDINGS
        (f,) = doc["findings"]
        assert (f["kind"], f["class"], f["severity"]) == ("Freeness", "RBQueue", "Error")
        assert doc["config"]["strict"] is True

    def test_no_constraints_is_clean(self):
        code, doc, _ = call_json("lint", QUEUES, "--strict")
        assert (code, doc["findings"]) == (EXIT_OK, [])


class TestTrace:
    def test_divergence_at_step_three(self):
        code, doc, _ = call_json("trace", RBQ, "BQueue", "RBQueue", "--depth", "3")
        assert code == EXIT_FINDINGS
        div = doc["divergence"]
        assert (div["step"], div["reason"]) == (3, "EnablednessMismatch")
        assert div["trace"] == ["join(item?=a)"] * 3

    def test_text_transcript(self):
        _, out, _ = call("trace", RBQ, "BQueue", "RBQueue")
        assert "divergence at step 3: EnablednessMismatch" in out
        assert out.rstrip().endswith("-> violated")

    def test_constraint_on_bqueue(self):
        code, out, _ = call("trace", BQ, "BQueue", "RBQueue", "--depth", "6")
        assert code == EXIT_OK
        assert out.rstrip().endswith("no divergence up to depth 6")

    def test_invariant_semantics(self):
        _, doc, _ = call_json("trace", RBQ, "BQueue", "RBQueue", "--constraint-semantics", "invariant")
        assert doc["divergence"]["step"] == 2
        assert doc["config"]["constraintSemantics"] == "invariant"


class TestDump:
    def test_writes_one_file_per_relation(self, tmp_path):
        code, out, _ = call("dump", QUEUES, "--dump-relations", str(tmp_path))
        assert code == EXIT_OK
        assert len(list(tmp_path.glob("*.rel"))) == 7

    def test_requires_a_directory(self):
        with pytest.raises(SystemExit):
            run(["dump", QUEUES])


def test_bundled_fixture_fallback(tmp_path):
    local = tmp_path / "queues.bi"
    local.write_text("class A { }\n")
    assert resolve_spec(str(local)) == local
    assert resolve_spec("/nonexistent/dir/queues.bi") == fixtures.path("queues.bi")
    assert resolve_spec("/nonexistent/dir/other.bi").name == "other.bi"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bicheck", "check", QUEUES, "--format", "json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == EXIT_FINDINGS
    assert json.loads(proc.stdout)["overall"] == "NonConformant"
    assert proc.stderr == ""


def test_schema_document_lists_every_kind_and_verdict():
    from pathlib import Path

    from bicheck.refinement import RULE_TAGS, Kind, Verdict

    doc = (Path(__file__).parent.parent / "docs" / "report-schema.md").read_text()
    for k in Kind:
        assert f"`{k.value}`" in doc and f"`{RULE_TAGS[k]}`" in doc
    for v in Verdict:
        assert f"`{v.value}`" in doc
