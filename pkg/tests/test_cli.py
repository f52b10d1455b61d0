import io
import subprocess
import sys

import pytest

from protoweave.cli import EXIT_INPUT, EXIT_LIMIT, EXIT_NO, EXIT_OK, main, parse_env


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(autouse=True)
def no_color(monkeypatch):
    monkeypatch.setenv("IC_COLOR", "0")


@pytest.fixture
def bankfile(tmp_path, corpus):
    from protoweave.syntax import print_file

    f = tmp_path / "bank.proto-ic"
    f.write_text(print_file({k: corpus[k] for k in ("pintan", "bank", "s_ba")}), encoding="utf-8")
    return str(f)


def test_parse_env():
    assert parse_env("") == frozenset()
    assert parse_env("pin, tan") == {"pin", "tan"}


def test_compose_weak_banking(bankfile):
    code, out, err = run("compose", "--mode", "weak", "--env", "", f"{bankfile}:pintan", f"{bankfile}:bank")
    assert code == EXIT_OK and err == ""
    lines = out.splitlines()
    assert lines[0].startswith("1: ?pin.sel{ok: assert(pin).require(pin).rec r.")
    assert lines[-1] == "mode=weak raw=2 canonical=1"


def test_compose_empty_exit_and_allow_empty(bankfile):
    code, out, _ = run("compose", f"{bankfile}:pintan", f"{bankfile}:bank")
    assert code == EXIT_NO and out == "mode=strong raw=0 canonical=0\n"
    code, _, _ = run("compose", "--allow-empty", f"{bankfile}:pintan", f"{bankfile}:bank")
    assert code == EXIT_OK


def test_compose_raw_and_output(tmp_path):
    dest = tmp_path / "out.proto-ic"
    code, out, _ = run("compose", "--raw-counts", "-o", str(dest), "@corpus:rec_left", "@corpus:rec_right")
    assert code == EXIT_OK
    assert out.splitlines()[-1] == "mode=strong raw=4 canonical=2"
    assert len(out.splitlines()) == 5
    assert dest.read_text().count("protocol rec_left_rec_right_") == 4


def test_check_exit_codes(bankfile):
    code, out, _ = run("check", f"{bankfile}:s_ba")
    assert code == EXIT_OK and out == "s_ba: well-asserted from {} post={}\n"
    # the loop consumes tan, so a second payment has none left
    code, out, _ = run("check", "--env", "pin,tan", f"{bankfile}:bank")
    assert code == EXIT_NO and "[rec]" in out and "missing tan" in out
    code, out, _ = run("check", bankfile)
    assert code == EXIT_NO and len(out.splitlines()) == 3


def test_trace():
    code, out, _ = run("trace", "@corpus:i1")
    assert code == EXIT_OK
    assert out.splitlines() == [
        "n0 : {} ⊢ ?pay.assert(paid).end",
        "n0 -> n1 : ?pay ⊢ {} ⊢ assert(paid).end",
        "n1 -> n2 : assert(paid) ⊢ {paid} ⊢ end",
        "states=3 edges=2 complete",
    ]
    code, out, _ = run("step", "--cap", "2", "@corpus:i1")
    assert out.splitlines()[-1] == "states=2 edges=1 truncated at cap 2"


def test_verify_example3():
    code, out, _ = run("verify", "@corpus:ex3_sa", "@corpus:ex3_sb", "--composed", "@corpus:ex3_sab")
    assert code == EXIT_NO
    assert "CHECK fair 1 holds" in out
    assert "CHECK progress 1 holds" in out
    assert "CHECK strong-fair 1 fails component=1 blocked=require(n) trace=[⊕ko]" in out
    code, out, _ = run("verify", "@corpus:ex3_sa", "@corpus:ex3_sb", "--composed", "@corpus:ex3_sab",
                       "--props", "progress,fair,simulation")
    assert code == EXIT_OK


def test_verify_from_compose():
    code, out, _ = run("verify", "@corpus:i1", "@corpus:i2", "--from-compose", "--mode", "all")
    assert code == EXIT_OK
    assert out.count("CHECK ") == 4


def test_verify_usage_errors():
    code, _, err = run("verify", "@corpus:i1", "@corpus:i2")
    assert code == EXIT_INPUT and err.startswith("error:usage:")
    code, _, err = run("verify", "@corpus:i1", "@corpus:i2", "--from-compose", "--props", "bogus")
    assert code == EXIT_INPUT and "unknown property" in err


def test_gen_and_extract_round_trip(tmp_path):
    for fmt, suffix in (("fsm", ".fsm.json"), ("stub", ".stub")):
        dest = tmp_path / f"bp{suffix}"
        assert run("gen", "--format", fmt, "-o", str(dest), "@corpus:bank_pintan")[0] == EXIT_OK
        code, out, _ = run("extract", str(dest))
        assert code == EXIT_OK
        assert out == ("protocol bank_pintan = ?pin.sel{ok: assert(pin).require(pin).rec r0.bra{"
                       "payment: assert(pay).consume(pay).!id.?tan.sel{ok: assert(tan).consume(tan)."
                       "?details.r0, fail: r0}, statement: !statement.r0, logout: consume(pin).end}, fail: end}\n")


def test_gen_dot_to_stdout():
    code, out, _ = run("generate", "--format", "dot", "@corpus:i1")
    assert code == EXIT_OK and out.startswith('digraph "i1" {')


def test_extract_errors(tmp_path):
    bad = tmp_path / "bad.fsm.json"
    bad.write_text('{"name": "x"}')
    code, _, err = run("extract", str(bad))
    assert code == EXIT_INPUT and err.startswith("error:schema:")
    loop = tmp_path / "loop.fsm.json"
    loop.write_text('{"initial":"s0","name":"l","states":["s0"],"transitions":[{"annotations":'
                    '[{"kind":"assert","name":"a"}],"from":"s0","kind":"silent","label":"tau","to":"s0"}]}')
    code, _, err = run("extract", str(loop))
    assert code == EXIT_INPUT and err.startswith("error:unguarded-cycle:")


@pytest.mark.parametrize("argv, category", [
    (("compose", "@corpus:nope", "@corpus:i1"), "name"),
    (("compose", "@corpus", "@corpus:i1"), "name"),
    (("compose", "--mode", "bogus", "@corpus:i1", "@corpus:i2"), "usage"),
    (("bogus",), "usage"),
    (("check", "/nonexistent/file.proto-ic"), "io"),
])
def test_input_errors(argv, category):
    code, out, err = run(*argv)
    assert code == EXIT_INPUT and out == ""
    assert err.startswith(f"error:{category}:") and err.count("\n") == 1


def test_parse_error(tmp_path):
    f = tmp_path / "x.proto-ic"
    f.write_text("protocol x = !p.\n")
    code, _, err = run("check", str(f))
    assert code == EXIT_INPUT and err.startswith("error:parse:")


def test_budget_limit():
    code, _, err = run("compose", "--budget", "5", "@corpus:s_i", "@corpus:s_u")
    assert code == EXIT_LIMIT and err.startswith("error:budget:")


def test_cap_limit():
    code, _, err = run("verify", "@corpus:s_i", "@corpus:s_u", "--from-compose", "--cap", "2", "--props", "simulation")
    assert code == EXIT_LIMIT and err.startswith("error:cap:")


def test_color(monkeypatch):
    monkeypatch.setenv("IC_COLOR", "1")
    _, out, _ = run("check", "@corpus:i1")
    assert "\x1b[32m" in out
    monkeypatch.setenv("IC_COLOR", "0")
    _, out, _ = run("check", "@corpus:i1")
    assert "\x1b" not in out


def test_output_is_deterministic():
    a = run("compose", "--mode", "all", "@corpus:sa_void", "@corpus:sb")
    b = run("compose", "--mode", "all", "@corpus:sa_void", "@corpus:sb")
    assert a == b and a[1].splitlines()[-1] == "mode=all raw=32 canonical=16"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "protoweave", "compose", "@corpus:i1", "@corpus:i2"],
                          capture_output=True, text=True, env={"IC_COLOR": "0", "PATH": ""})
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[-1] == "mode=strong raw=1 canonical=1"
