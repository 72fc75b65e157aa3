from __future__ import annotations

import json
import subprocess
import sys

import pytest

from protocheck import fixtures as F
from protocheck.cli import main, run
from protocheck.codec import term_to_json
from protocheck.manifest import McpRegistry, dump_json, manifest_to_json
from protocheck.mapping import phi
from protocheck.semantics import build_lts


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        path.write_text(obj if isinstance(obj, str) else dump_json(obj), encoding="utf-8")
        return str(path)

    return write


def test_parse_text_and_json(files):
    src = files("nil.pc", "(new c)(0 | 0)")
    out = run(["parse", src, "--format", "json"])
    assert out.exit_code == 0
    assert json.loads(out.report)["kind"] == "restrict"
    assert run(["parse", src]).report.startswith("(new c)")


def test_parse_error_is_exit_2(files):
    bad = files("bad.pc", "call f (a: )")
    out = run(["parse", bad])
    assert out.exit_code == 2 and "error" in out.report


def test_lts_of_bookflight(files):
    path = files("flights.json", F.BOOKFLIGHT_SCHEMA)
    out = run(["lts", path, "--format", "json"])
    assert out.exit_code == 0
    # the generated universe has one conforming map: Intent, ExecuteS, ResultT, 0
    assert len(json.loads(out.report)["states"]) == 4
    uni = files("u.json", {"BookFlight": [F.BOOKFLIGHT_FULL, F.BOOKFLIGHT_NO_DATE]})
    assert len(json.loads(run(["lts", path, "--universe", uni, "--format", "json"]).report)["states"]) == 5
    assert "digraph" in run(["lts", path, "--dot"]).report


def test_lts_truncation_is_exit_3(files):
    path = files("flights.json", F.BOOKFLIGHT_SCHEMA)
    assert run(["lts", path, "--max-states", "2"]).exit_code == 3


def test_bisim_bookflight_vs_image(files):
    a = files("flights.json", F.BOOKFLIGHT_SCHEMA)
    b = files("image.json", term_to_json(phi(F.book_flight())))
    assert run(["bisim", a, b]).exit_code == 0
    strong = run(["bisim", a, b, "--mode", "strong", "--format", "json"])
    assert strong.exit_code == 1
    assert "witness" in json.loads(strong.report)
    assert run(["traces", a, b]).exit_code == 0


def test_bisim_on_lts_files(files):
    left, right = F.separating_pair()
    a, b = files("l.json", left.to_json()), files("r.json", right.to_json())
    assert run(["bisim", a, b]).exit_code == 1
    assert run(["traces", a, b]).exit_code == 0


def test_single_trace_listing(files):
    path = files("issue.json", F.GITHUB_MANIFEST)
    out = run(["traces", path, "--max-len", "4", "--format", "json"])
    assert out.exit_code == 0
    assert any(len(t) == 4 for t in json.loads(out.report)["traces"])


def test_map_resource_manifest_fails(files):
    out = run(["map", files("res.json", F.RESOURCE_MANIFEST), "--dir", "mcp-to-sgd", "--format", "json"])
    assert out.exit_code == 1
    assert json.loads(out.report)["details"]["reason"] == "NoSgdEquivalentResource"


def test_map_directions(files, capsys):
    out = run(["map", files("gh.json", F.GITHUB_MANIFEST), "--dir", "mcp-to-sgd"])
    assert out.exit_code == 0
    assert json.loads(out.report)["intents"][0]["name"] == "create_issue"
    assert "transactionality" in capsys.readouterr().err
    fwd = run(["map", files("flights.json", F.BOOKFLIGHT_SCHEMA), "--dir", "sgd-to-mcp", "--plus"])
    assert json.loads(fwd.report)["tools"][0]["x-mcp-plus"]["side_effects"] == "write"


def test_map_plus_missing_metadata(files):
    out = run(["map", files("du.json", F.DELETE_USER_PLUS_MANIFEST), "--dir", "mcp-to-sgd", "--plus", "--format", "json"])
    assert out.exit_code == 1
    assert json.loads(out.report)["details"]["field"] == "failure_modes"


def test_typecheck_and_tokens(files):
    du = files("du.json", F.DELETE_USER_PLUS_MANIFEST)
    assert run(["typecheck", du]).exit_code == 1
    good = files("good.json", manifest_to_json(F.payment_registry()))
    assert run(["typecheck", good, "--tau", "0.01", "--summary-ratio", "1"]).exit_code in (0, 1)
    assert run(["tokens", du]).exit_code == 2  # no summary
    from protocheck.corpus import token_corpus

    toks = files("toks.json", manifest_to_json(token_corpus()))
    out = run(["tokens", toks, "--format", "json"])
    assert out.exit_code == 0
    assert json.loads(out.report)["details"]["ratio"] == pytest.approx(0.19)
    assert run(["typecheck", du, "--tau", "2"]).exit_code == 2


def test_verify(files):
    du = files("du.json", F.DELETE_USER_PLUS_MANIFEST)
    assert run(["verify", du]).exit_code == 0
    leak = files("leak.json", term_to_json(F.direct_leak()))
    assert run(["verify", leak, "--property", "confine"]).exit_code == 1
    mutant = files("mutant.json", term_to_json(F.string_in_code_mutant()))
    assert run(["verify", mutant, "--property", "inert"]).exit_code == 1


def test_verify_json_is_valid(files):
    du = files("du.json", F.DELETE_USER_PLUS_MANIFEST)
    out = run(["verify", du, "--format", "json"])
    assert json.loads(out.report)["status"] == "pass"


def test_demo_all_pass():
    out = run(["demo"])
    assert out.exit_code == 0
    assert "FAIL" not in out.report


def test_usage_errors(files, tmp_path):
    assert run([]).exit_code == 2
    assert run(["frobnicate"]).exit_code == 2
    assert run(["parse", str(tmp_path / "missing.pc")]).exit_code == 2
    assert run(["bisim", files("a.pc", "0")]).exit_code == 2
    assert run(["parse", files("odd.json", "[1, 2]")]).exit_code == 2


def test_env_and_flag_precedence(files, monkeypatch):
    path = files("flights.json", F.BOOKFLIGHT_SCHEMA)
    monkeypatch.setenv("PROTOCHECK_MAX_STATES", "2")
    assert run(["lts", path]).exit_code == 3
    assert run(["lts", path, "--max-states", "100"]).exit_code == 0
    monkeypatch.setenv("PROTOCHECK_FORMAT", "json")
    assert json.loads(run(["lts", path, "--max-states", "100"]).report)["initial"] == 0


def test_deterministic_output(files):
    path = files("flights.json", F.BOOKFLIGHT_SCHEMA)
    first = run(["lts", path, "--format", "json"]).report
    assert run(["lts", path, "--format", "json"]).report == first


def test_universe_file(files):
    path = files("issue.json", F.GITHUB_MANIFEST)
    uni = files("u.json", {"create_issue": [{"owner": "x"}]})
    out = run(["lts", path, "--universe", uni, "--format", "json"])
    lts = json.loads(out.report)
    assert any(t[1]["kind"] == "error" for t in lts["transitions"])


def test_main_prints_errors_to_stderr(capsys):
    assert main(["parse", "/nonexistent/file.pc"]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_module_entry_point(files):
    path = files("nil.pc", "0")
    proc = subprocess.run([sys.executable, "-m", "protocheck", "parse", path], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "0"


def test_registry_of_term_file(files):
    reg = McpRegistry((F.delete_user_plus(),))
    lts = build_lts(reg.as_process(), F.plus_config(reg))
    assert lts.num_states > 1
