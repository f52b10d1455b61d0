"""Command-line front end.

Protocols are addressed as FILE:NAME, where FILE is a ``.proto-ic`` file or
``@corpus`` for the bundled corpus.  A FILE holding exactly one protocol may
be given without a name.

Exit status: 0 success / property holds, 1 negative verdict, 2 bad input,
3 a search or exploration limit was hit.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

from protoweave.artifacts import (
    FsmError,
    emit_dot,
    emit_fsm_json,
    emit_stub,
    extract,
    fsm_from_json,
    parse_stub,
    to_fsm,
)
from protoweave.assertions import format_env, well_asserted
from protoweave.compose import (
    DEFAULT_BUDGET,
    ComposeError,
    InvalidInput,
    Mode,
    SearchBudgetExceeded,
    compose,
)
from protoweave.corpus import corpus_text
from protoweave.protocol import ProtocolError, ValidationError, free_vars
from protoweave.semantics import DEFAULT_CAP, Config, explore, has_progress
from protoweave.syntax import ParseError, parse_file_text, print_file, print_protocol
from protoweave.verify import (
    DEFAULT_DEPTH,
    Inconclusive,
    behaviour_preserved,
    check_fair,
    check_strong_fair,
)

EXIT_OK, EXIT_NO, EXIT_INPUT, EXIT_LIMIT = 0, 1, 2, 3
CORPUS_REF = "@corpus"
PROPS = ("progress", "simulation", "fair", "strong-fair")


class CliError(Exception):
    def __init__(self, category, message, status=EXIT_INPUT):
        self.category = category
        self.status = status
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message)


# -- helpers -----------------------------------------------------------------

def _use_color(stream) -> bool:
    flag = os.environ.get("IC_COLOR")
    if flag == "0":
        return False
    if flag == "1":
        return True
    return hasattr(stream, "isatty") and stream.isatty()


class Out:
    def __init__(self, stream):
        self.stream = stream
        self.color = _use_color(stream)

    def line(self, text=""):
        self.stream.write(text + "\n")

    def verdict(self, ok: bool, text: str) -> str:
        if not self.color:
            return text
        return f"\x1b[{32 if ok else 31}m{text}\x1b[0m"


def parse_env(text) -> frozenset:
    if text is None:
        return frozenset()
    names = [n.strip() for n in text.split(",") if n.strip()]
    return frozenset(names)


def _read(path) -> str:
    if path == CORPUS_REF:
        return corpus_text()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError("io", f"cannot read {path}: {e.strerror}") from None


def load_protocols(path) -> dict:
    try:
        return parse_file_text(_read(path), path)
    except ParseError as e:
        raise CliError("parse", str(e)) from None


def resolve(ref: str):
    """FILE:NAME -> (NAME, protocol)."""
    path, sep, name = ref.rpartition(":")
    if not sep or not name or "/" in name:
        path, name = ref, None
    protos = load_protocols(path)
    if name is None:
        if len(protos) != 1:
            raise CliError("name", f"{path} holds {len(protos)} protocols; use {path}:NAME")
        return next(iter(protos.items()))
    if name not in protos:
        raise CliError("name", f"no protocol {name!r} in {path}")
    return name, protos[name]


def _write(out: Out, text: str, dest):
    if dest:
        try:
            Path(dest).write_text(text, encoding="utf-8")
        except OSError as e:
            raise CliError("io", f"cannot write {dest}: {e.strerror}") from None
    else:
        out.stream.write(text)


# -- commands ----------------------------------------------------------------

def cmd_check(args, out: Out) -> int:
    refs = args.protocols
    a = parse_env(args.env)
    items = []
    for ref in refs:
        if ":" in ref:
            items.append(resolve(ref))
        else:
            items.extend(load_protocols(ref).items())
    status = EXIT_OK
    for name, s in items:
        res = well_asserted(a, s)
        if free_vars(s):
            out.line(f"{name}: {out.verdict(False, 'open')} free {sorted(free_vars(s))}")
            status = EXIT_NO
        elif res.ok:
            out.line(f"{name}: {out.verdict(True, 'well-asserted')} from {format_env(a)} post={format_env(res.post)}")
        else:
            out.line(f"{name}: {out.verdict(False, 'not well-asserted')} from {format_env(a)} {res.describe()}")
            status = EXIT_NO
    return status


def cmd_trace(args, out: Out) -> int:
    _, s = resolve(args.protocol)
    g = explore(Config(parse_env(args.env), s), args.cap)
    out.line(f"n0 : {g.nodes[0]}")
    for line in g.trace_lines():
        out.line(line)
    state = "complete" if g.complete else f"truncated at cap {args.cap}"
    out.line(f"states={len(g.nodes)} edges={len(g.edges)} {state}")
    return EXIT_OK


def _compose(args, left, right):
    try:
        return compose(left, right, parse_env(args.env), args.mode, args.budget)
    except SearchBudgetExceeded as e:
        raise CliError("budget", str(e), EXIT_LIMIT) from None
    except InvalidInput as e:
        raise CliError("input", str(e)) from None
    except ComposeError as e:
        raise CliError("internal", str(e)) from None


def cmd_compose(args, out: Out) -> int:
    ln, left = resolve(args.left)
    rn, right = resolve(args.right)
    res = _compose(args, left, right)
    shown = res.raw if args.raw_counts else res.results
    for k, s in enumerate(shown, 1):
        out.line(f"{k}: {print_protocol(s)}")
    out.line(res.summary())
    if args.output:
        _write(out, print_file((f"{ln}_{rn}_{k}", s) for k, s in enumerate(shown, 1)), args.output)
    if res.canonical_count == 0 and not args.allow_empty:
        return EXIT_NO
    return EXIT_OK


def cmd_verify(args, out: Out) -> int:
    _, left = resolve(args.left)
    _, right = resolve(args.right)
    a = parse_env(args.env)
    props = [p.strip() for p in args.props.split(",") if p.strip()]
    for p in props:
        if p not in PROPS:
            raise CliError("usage", f"unknown property {p!r}; choose from {', '.join(PROPS)}")
    if args.composed:
        targets = [resolve(args.composed)[1]]
    elif args.from_compose:
        targets = _compose(args, left, right).results
    else:
        raise CliError("usage", "verify needs --composed FILE:NAME or --from-compose")
    status = EXIT_OK
    for k, s in enumerate(targets, 1):
        out.line(f"RESULT {k}: {print_protocol(s)}")
        for p in props:
            try:
                ok, text = _verify_one(p, s, left, right, a, args)
            except Inconclusive as e:
                raise CliError("cap", str(e), EXIT_LIMIT) from None
            out.line(f"CHECK {p} {k} {out.verdict(ok, text)}")
            if not ok:
                status = EXIT_NO
    if not targets:
        out.line("no compositions to verify")
    return status


def _verify_one(prop, s, left, right, a, args):
    if prop == "progress":
        rep = has_progress(s, args.cap, a)
        if rep.holds is None:
            raise Inconclusive(f"state space exceeds cap {args.cap}")
        if rep.holds:
            return True, "holds"
        return False, "fails stuck after [" + " ".join(str(l) for l in rep.witness) + "]"
    if prop == "simulation":
        w = behaviour_preserved(s, left, right, a, args.cap)
        return w.verdict, w.describe()
    check = check_fair if prop == "fair" else check_strong_fair
    rep = check(s, left, right, a, depth=args.depth, cap=args.cap)
    text = rep.verdict
    if rep.witness is not None:
        text += " " + rep.witness.describe()
    return rep.holds, text


def cmd_gen(args, out: Out) -> int:
    name, s = resolve(args.protocol)
    try:
        f = to_fsm(s, name)
    except ProtocolError as e:
        raise CliError("input", str(e)) from None
    if args.format == "dot":
        text = emit_dot(f)
    elif args.format == "stub":
        text = emit_stub(f)
    else:
        text = emit_fsm_json(f).decode("utf-8") + "\n"
    _write(out, text, args.output)
    return EXIT_OK


def cmd_extract(args, out: Out) -> int:
    text = _read(args.input)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            f = parse_stub(text) if args.input.endswith(".stub") else fsm_from_json(text)
            s = extract(f)
        except FsmError as e:
            raise CliError(e.category, str(e)) from None
    for w in caught:
        sys.stderr.write(f"warning: {w.message}\n")
    _write(out, print_file([(args.name or f.name, s)]), args.output)
    return EXIT_OK


# -- wiring ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="protoweave", description="Compose asserted protocols.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp, env=True, cap=False):
        if env:
            sp.add_argument("--env", default="", help="comma-separated assertion names (empty = no assertions)")
        if cap:
            sp.add_argument("--cap", type=int, default=DEFAULT_CAP, help="state exploration cap")

    sp = sub.add_parser("check", help="validate and check well-assertedness")
    sp.add_argument("protocols", nargs="+", metavar="FILE[:NAME]")
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("trace", aliases=["step"], help="explore the transition system")
    sp.add_argument("protocol", metavar="FILE:NAME")
    common(sp, cap=True)
    sp.set_defaults(func=cmd_trace)

    def compose_opts(sp):
        sp.add_argument("--mode", type=_mode, default=Mode.STRONG, help="strong|weak|corr|all")
        sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="judgement budget")

    sp = sub.add_parser("compose", help="all interleaving compositions of two protocols")
    sp.add_argument("left", metavar="FILE:NAME")
    sp.add_argument("right", metavar="FILE:NAME")
    common(sp)
    compose_opts(sp)
    sp.add_argument("--allow-empty", action="store_true", help="exit 0 even without results")
    sp.add_argument("--raw-counts", action="store_true", help="list every raw result, not one per alpha class")
    sp.add_argument("-o", "--output", help="also write the results as a protocol file")
    sp.set_defaults(func=cmd_compose)

    sp = sub.add_parser("verify", help="check correctness properties of compositions")
    sp.add_argument("left", metavar="FILE:NAME")
    sp.add_argument("right", metavar="FILE:NAME")
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--composed", metavar="FILE:NAME", help="the composition to check")
    grp.add_argument("--from-compose", action="store_true", help="check every composition")
    sp.add_argument("--props", default=",".join(PROPS), help="comma-separated subset of " + ",".join(PROPS))
    sp.add_argument("--depth", type=int, default=DEFAULT_DEPTH, help="fairness depth bound")
    common(sp, cap=True)
    compose_opts(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("gen", aliases=["generate"], help="emit a state machine artifact")
    sp.add_argument("protocol", metavar="FILE:NAME")
    sp.add_argument("--format", choices=("dot", "fsm", "stub"), default="fsm")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("extract", help="recover a protocol from a .fsm.json or .stub file")
    sp.add_argument("input", metavar="FILE")
    sp.add_argument("--name", help="protocol name to print (default: the machine's name)")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_extract)
    return p


def _mode(text):
    try:
        return Mode.parse(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown mode {text!r}") from None


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    out = Out(stdout)
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except CliError as e:
        stderr.write(f"error:{e.category}:{e}\n")
        return e.status
    except ValidationError as e:
        stderr.write(f"error:validation:{e}\n")
        return EXIT_INPUT


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
