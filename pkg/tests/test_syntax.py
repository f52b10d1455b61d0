import pytest
from hypothesis import given

from protoweave.protocol import Action, Assert, Choice, ChoiceOp, End, Polarity, Prefix, Rec, ValidationError, Var
from protoweave.syntax import (
    ParseError,
    SourceText,
    load_file,
    parse,
    parse_file_text,
    print_file,
    print_protocol,
    tokenize,
)
from strategies import PROPERTY_SETTINGS, protocols


def test_parse_builds_expected_tree():
    s = parse("?pay.assert(paid).consume(paid).!item.end")
    assert s == Prefix(Action.receive("pay"), Assert("paid", parse("consume(paid).!item.end")))
    assert parse("rec t.p1.t") == Rec("t", Prefix(Action(Polarity.NEUTRAL, "p1"), Var("t")))


@pytest.mark.parametrize("src, op", [
    ("+{a: end}", ChoiceOp.PLAIN),
    ("sel{a: end}", ChoiceOp.SELECT),
    ("⊕{a: end}", ChoiceOp.SELECT),
    ("bra{a: end}", ChoiceOp.OFFER),
    ("&{a: end}", ChoiceOp.OFFER),
])
def test_choice_operators(src, op):
    assert parse(src) == Choice(op, (("a", End()),))


def test_keywords_as_labels_and_payloads():
    s = parse("bra{end: !end.end, rec: end}")
    assert s.labels == ("end", "rec")


def test_comments_and_whitespace():
    assert parse("// intro\n  !p . // tail\n end") == parse("!p.end")


def test_print_is_compact():
    s = parse("?pwd . sel { ok : assert(n) . end , ko : end }")
    assert print_protocol(s) == "?pwd.sel{ok: assert(n).end, ko: end}"


def test_corpus_print_parse_identity(corpus):
    for name, s in corpus.items():
        text = print_protocol(s)
        assert parse(text) == s, name
        assert print_protocol(parse(text)) == text


@PROPERTY_SETTINGS
@given(protocols())
def test_print_parse_roundtrip(s):
    assert parse(print_protocol(s)) == s


@pytest.mark.parametrize("src, line, col", [
    ("!p.", 1, 4),
    ("!p.\n  sel{a end}", 2, 9),
    ("assert(n).", 1, 11),
    ("!p.end end", 1, 8),
    ("rec.t", 1, 4),
    ("!p.$", 1, 4),
])
def test_parse_errors_carry_positions(src, line, col):
    with pytest.raises(ParseError) as e:
        parse(src)
    assert (e.value.line, e.value.col) == (line, col)


def test_keyword_in_protocol_position():
    with pytest.raises(ParseError, match="keyword"):
        parse("!p.assert")


def test_parse_rejects_invalid_protocols():
    with pytest.raises(ValidationError):
        parse("rec t.t")
    with pytest.raises(ValidationError):
        parse("rec t.!p.end")


def test_parse_renames_duplicate_binders():
    s = parse("+{a: rec t.!p.t, b: rec t.!q.t}")
    assert print_protocol(s) == "+{a: rec t.!p.t, b: rec t1.!q.t1}"


def test_source_text_origin():
    with pytest.raises(ParseError) as e:
        parse(SourceText("!p.", "demo.proto-ic"))
    assert str(e.value).startswith("demo.proto-ic:1:4:")


def test_file_format_roundtrip():
    text = "protocol a = !p.end\n// note\nprotocol b = rec t.?q.t\n"
    items = parse_file_text(text)
    assert list(items) == ["a", "b"]
    assert print_file(items) == "protocol a = !p.end\nprotocol b = rec t.?q.t\n"


def test_file_errors():
    with pytest.raises(ParseError, match="duplicate"):
        parse_file_text("protocol a = end\nprotocol a = end")
    with pytest.raises(ParseError, match="protocol b"):
        parse_file_text("protocol a = end\nprotocol b = rec t.t")
    with pytest.raises(ParseError, match="expected 'protocol'"):
        parse_file_text("a = end")


def test_load_file(tmp_path):
    f = tmp_path / "x.proto-ic"
    f.write_text("protocol x = !p.end\n", encoding="utf-8")
    assert load_file(f) == {"x": parse("!p.end")}


def test_tokenize_reports_bad_character():
    with pytest.raises(ParseError):
        tokenize("!p.#")
