"""Protocols as finite state machines: JSON, DOT, gen_statem-style stubs, extraction.

Convention for assertion annotations: a transition carries the assertion
chain that directly follows it in the protocol, so in

    ?pin.sel{ok: assert(pin).require(pin).S, fail: end}

the `ok` transition is annotated [assert pin, require pin].  A chain that no
transition precedes (at the very start, or at the head of a recursion body)
is carried by a silent transition labelled `tau`.
"""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass, field

from protoweave.protocol import (
    ASSERTION_KINDS,
    Action,
    Choice,
    ChoiceOp,
    End,
    Polarity,
    Prefix,
    Protocol,
    ProtocolError,
    Rec,
    Var,
    _Assertion,
    alpha_canonicalize,
    free_vars,
    strip_assertions,
    validate,
    with_chain,
)

STOP = "$STOP"
SILENT_LABEL = "tau"
ACTION_KINDS = {"send": Polarity.SEND, "receive": Polarity.RECEIVE, "neutral": Polarity.NEUTRAL}
CHOICE_KINDS = {"select": ChoiceOp.SELECT, "offer": ChoiceOp.OFFER, "plain": ChoiceOp.PLAIN}
KINDS = tuple(ACTION_KINDS) + tuple(CHOICE_KINDS) + ("silent",)
_KIND_OF_POLARITY = {v: k for k, v in ACTION_KINDS.items()}
_KIND_OF_OP = {v: k for k, v in CHOICE_KINDS.items()}

FSM_JSON_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["name", "states", "initial", "transitions"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "states": {"type": "array", "items": {"type": "string"}, "minItems": 1, "uniqueItems": True},
        "initial": {"type": "string"},
        "transitions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["from", "to", "kind", "label", "annotations"],
                "additionalProperties": False,
                "properties": {
                    "from": {"type": "string"},
                    "to": {"type": "string"},
                    "kind": {"enum": list(KINDS)},
                    "label": {"type": "string"},
                    "annotations": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["kind", "name"],
                            "additionalProperties": False,
                            "properties": {
                                "kind": {"enum": list(ASSERTION_KINDS)},
                                "name": {"type": "string"},
                            },
                        },
                    },
                },
            },
        },
    },
}


class FsmError(ValueError):
    """Malformed state machine.  `category` is "schema" or "unguarded-cycle"."""

    def __init__(self, message, category="schema"):
        self.category = category
        super().__init__(message)


class UnreachableStateWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Transition:
    src: str
    dst: str
    kind: str
    label: str
    annotations: tuple = ()  # ((kind, name), ...)

    def describe(self):
        ann = ", ".join(f"{k} {n}" for k, n in self.annotations)
        return (f"[{ann}] " if ann else "") + f"{self.kind}:{self.label}"


@dataclass(frozen=True)
class Fsm:
    name: str
    states: tuple
    initial: str
    transitions: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        if not self.name:
            raise FsmError("state machine name must not be empty")
        if not self.states:
            raise FsmError("state machine has no states")
        if len(set(self.states)) != len(self.states):
            raise FsmError("duplicate state id")
        if STOP in self.states:
            raise FsmError(f"{STOP} is reserved for the terminal marker")
        if self.initial not in self.states:
            raise FsmError(f"initial state {self.initial!r} is not declared")
        declared = set(self.states)
        for t in self.transitions:
            if t.src not in declared:
                raise FsmError(f"transition source {t.src!r} is not declared")
            if t.dst != STOP and t.dst not in declared:
                raise FsmError(f"transition target {t.dst!r} is not declared")
            if t.kind not in KINDS:
                raise FsmError(f"unknown transition kind {t.kind!r}")
            for k, _ in t.annotations:
                if k not in ASSERTION_KINDS:
                    raise FsmError(f"unknown annotation kind {k!r}")

    def outgoing(self, state):
        return [t for t in self.transitions if t.src == state]


# -- protocol -> fsm -----------------------------------------------------------

def _chain_annotations(chain):
    return tuple((a.keyword, a.name) for a in chain)


def to_fsm(s: Protocol, name: str = "protocol") -> Fsm:
    problems = validate(s)
    if problems:
        raise ProtocolError(f"invalid protocol: {problems[0]}")
    if free_vars(s):
        raise ProtocolError(f"protocol is open: free {sorted(free_vars(s))}")
    states: list = []
    out: list = []  # (source index, transition)

    def new_state():
        sid = f"s{len(states)}"
        states.append(sid)
        return sid

    def emit(sid, dst, kind, label, chain):
        out.append((int(sid[1:]), Transition(sid, dst, kind, label, _chain_annotations(chain))))

    def build(t, binders, sid=None):
        """State id for t; t is never preceded by an unattached chain."""
        if isinstance(t, End):
            return STOP
        if isinstance(t, Var):
            return binders[t.name]
        if isinstance(t, _Assertion):
            sid = sid or new_state()
            chain, head = strip_assertions(t)
            emit(sid, build(head, binders), "silent", SILENT_LABEL, chain)
            return sid
        if isinstance(t, Rec):
            sid = sid or new_state()
            return build(t.body, {**binders, t.var: sid}, sid)
        sid = sid or new_state()
        if isinstance(t, Prefix):
            chain, head = strip_assertions(t.cont)
            emit(sid, build(head, binders), _KIND_OF_POLARITY[t.action.polarity], t.action.payload, chain)
            return sid
        if isinstance(t, Choice):
            for label, c in t.branches:
                chain, head = strip_assertions(c)
                emit(sid, build(head, binders), _KIND_OF_OP[t.op], label, chain)
            return sid
        raise TypeError(f"not a protocol: {t!r}")

    if isinstance(s, End):
        new_state()
    else:
        build(s, {})
    out.sort(key=lambda p: p[0])  # stable: branch order survives
    return Fsm(name, tuple(states), "s0", tuple(t for _, t in out))


# -- json ------------------------------------------------------------------

def fsm_to_dict(f: Fsm) -> dict:
    return {
        "name": f.name,
        "states": list(f.states),
        "initial": f.initial,
        "transitions": [
            {
                "from": t.src,
                "to": t.dst,
                "kind": t.kind,
                "label": t.label,
                "annotations": [{"kind": k, "name": n} for k, n in t.annotations],
            }
            for t in f.transitions
        ],
    }


def emit_fsm_json(f: Fsm) -> bytes:
    return json.dumps(fsm_to_dict(f), sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False).encode("utf-8")


def _need(cond, msg):
    if not cond:
        raise FsmError(msg)


def fsm_from_dict(d) -> Fsm:
    """Structural check against FSM_JSON_SCHEMA, then build the Fsm."""
    _need(isinstance(d, dict), "top level must be an object")
    keys = {"name", "states", "initial", "transitions"}
    _need(set(d) == keys, f"expected keys {sorted(keys)}, found {sorted(d)}")
    _need(isinstance(d["name"], str), "name must be a string")
    _need(isinstance(d["states"], list) and all(isinstance(x, str) for x in d["states"]),
          "states must be a list of strings")
    _need(isinstance(d["initial"], str), "initial must be a string")
    _need(isinstance(d["transitions"], list), "transitions must be a list")
    ts = []
    tkeys = {"from", "to", "kind", "label", "annotations"}
    for t in d["transitions"]:
        _need(isinstance(t, dict) and set(t) == tkeys, f"transition needs exactly {sorted(tkeys)}")
        _need(all(isinstance(t[k], str) for k in ("from", "to", "kind", "label")),
              "transition fields must be strings")
        _need(isinstance(t["annotations"], list), "annotations must be a list")
        anns = []
        for a in t["annotations"]:
            _need(isinstance(a, dict) and set(a) == {"kind", "name"}, "annotation needs kind and name")
            _need(isinstance(a["kind"], str) and isinstance(a["name"], str), "annotation fields must be strings")
            anns.append((a["kind"], a["name"]))
        ts.append(Transition(t["from"], t["to"], t["kind"], t["label"], tuple(anns)))
    return Fsm(d["name"], tuple(d["states"]), d["initial"], tuple(ts))


def fsm_from_json(data) -> Fsm:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    try:
        d = json.loads(data)
    except json.JSONDecodeError as e:
        raise FsmError(f"not JSON: {e}") from None
    return fsm_from_dict(d)


# -- dot -------------------------------------------------------------------

def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(f: Fsm) -> str:
    lines = [f"digraph {_dot_quote(f.name)} {{", "  rankdir=LR;", "  node [shape=circle];"]
    for s in f.states:
        attrs = " [style=bold]" if s == f.initial else ""
        lines.append(f"  {_dot_quote(s)}{attrs};")
    if any(t.dst == STOP for t in f.transitions):
        lines.append(f"  {_dot_quote(STOP)} [shape=doublecircle];")
    for t in f.transitions:
        lines.append(f"  {_dot_quote(t.src)} -> {_dot_quote(t.dst)} [label={_dot_quote(t.describe())}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- stubs -----------------------------------------------------------------

_ERLANG_RESERVED = {
    "after", "and", "andalso", "band", "begin", "bnot", "bor", "bsl", "bsr", "bxor",
    "case", "catch", "cond", "div", "else", "end", "fun", "if", "let", "maybe", "not",
    "of", "or", "orelse", "receive", "rem", "try", "when", "xor",
}
_BARE_ATOM = re.compile(r"[a-z][A-Za-z0-9_@]*\Z")
# outgoing events are internal, incoming ones are casts
_EVENT_TYPE = {"send": "internal", "select": "internal", "silent": "internal"}


def _atom(s: str) -> str:
    if _BARE_ATOM.match(s) and s not in _ERLANG_RESERVED:
        return s
    return "'" + s.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _unatom(s: str) -> str:
    if s.startswith("'"):
        return re.sub(r"\\(.)", r"\1", s[1:-1])
    return s


def emit_stub(f: Fsm) -> str:
    """A gen_statem-style skeleton; state k of `f.states` becomes state<k+1>."""
    fn = {s: f"state{k + 1}" for k, s in enumerate(f.states)}
    lines = [
        f"-module({_atom(f.name)}).",
        "-behaviour(gen_statem).",
        "%% states " + " ".join(f.states),
        "",
    ]
    if f.transitions:
        lines += [
            "callback_mode() -> state_functions.",
            "",
            f"init(Data) -> {{ok, {fn[f.initial]}, Data}}.",
            "",
        ]
    for s in f.states:
        ts = f.outgoing(s)
        for k, t in enumerate(ts):
            for kind, name in t.annotations:
                lines.append(f"%{kind} {name}")
            ev = _EVENT_TYPE.get(t.kind, "cast")
            if t.dst == STOP:
                result = "{stop, normal, Data}"
            else:
                result = f"{{next_state, {fn[t.dst]}, Data}}"
            end = "." if k == len(ts) - 1 else ";"
            lines.append(f"{fn[s]}({ev}, {_atom(t.label)}, Data) -> {result}{end}   %% {t.kind}")
        if ts:
            lines.append("")
    lines.append("terminate(_Reason, _State, _Data) -> ok.")
    return "\n".join(lines) + "\n"


_CLAUSE_RE = re.compile(
    r"(?P<state>state\d+)\((?P<ev>cast|internal), (?P<label>'(?:[^'\\]|\\.)*'|[a-z][A-Za-z0-9_@]*), Data\)"
    r" -> (?:\{next_state, (?P<dst>state\d+), Data\}|\{stop, normal, Data\})[;.]\s+%% (?P<kind>\w+)\Z"
)
_ANN_RE = re.compile(r"%(assert|require|consume) (\S+)\Z")


def parse_stub(text: str) -> Fsm:
    """Read back a stub produced by emit_stub (comments and clause heads only)."""
    name = None
    states = None
    initial = None
    pending: list = []
    ts = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        m = re.match(r"-module\((.+)\)\.\Z", line)
        if m:
            name = _unatom(m.group(1))
            continue
        if line.startswith("%% states "):
            states = line[len("%% states "):].split()
            continue
        m = _ANN_RE.match(line)
        if m:
            pending.append((m.group(1), m.group(2)))
            continue
        m = re.match(r"init\(Data\) -> \{ok, (state\d+), Data\}\.\Z", line)
        if m:
            initial = m.group(1)
            continue
        m = _CLAUSE_RE.match(line)
        if m:
            ts.append((m.group("state"), m.group("dst"), m.group("kind"),
                       _unatom(m.group("label")), tuple(pending)))
            pending = []
            continue
        if line.startswith(("-behaviour", "callback_mode", "terminate")):
            continue
        raise FsmError(f"line {lineno}: unrecognised stub line {line!r}")
    if name is None or states is None:
        raise FsmError("stub lacks a -module line or a states comment")
    if pending:
        raise FsmError("annotation comments not followed by a clause")

    def sid(fn):
        k = int(fn[len("state"):]) - 1
        if not 0 <= k < len(states):
            raise FsmError(f"unknown state function {fn}")
        return states[k]

    return Fsm(
        name,
        tuple(states),
        sid(initial) if initial else states[0],
        tuple(Transition(sid(s), STOP if d is None else sid(d), k, l, a) for s, d, k, l, a in ts),
    )


# -- extraction ------------------------------------------------------------

def _reachable(f: Fsm):
    seen = {f.initial}
    stack = [f.initial]
    while stack:
        s = stack.pop()
        for t in f.outgoing(s):
            if t.dst != STOP and t.dst not in seen:
                seen.add(t.dst)
                stack.append(t.dst)
    return seen


def extract(data) -> Protocol:
    """Rebuild the protocol of an FSM (JSON bytes/text or an Fsm)."""
    f = data if isinstance(data, Fsm) else fsm_from_json(data)
    reach = _reachable(f)
    dropped = [s for s in f.states if s not in reach]
    if dropped:
        warnings.warn(f"unreachable states dropped: {', '.join(dropped)}", UnreachableStateWarning)
    by_src: dict = {}
    for t in f.transitions:
        by_src.setdefault(t.src, []).append(t)
    var_of = {s: f"r{k}" for k, s in enumerate(f.states)}
    looped: set = set()
    stack: list = []  # (state, kind of the transition taken from it)

    def go(sid) -> Protocol:
        if sid == STOP:
            return End()
        on = [k for k, (s, _) in enumerate(stack) if s == sid]
        if on:
            if all(kind == "silent" for _, kind in stack[on[0]:]):
                raise FsmError(f"cycle through {sid} has no guarding transition", "unguarded-cycle")
            looped.add(sid)
            return Var(var_of[sid])
        outs = by_src.get(sid, [])
        if not outs:
            return End()
        kinds = {t.kind for t in outs}
        if len(kinds) > 1:
            raise FsmError(f"state {sid} mixes transition kinds {sorted(kinds)}")
        kind = kinds.pop()
        if kind not in CHOICE_KINDS and len(outs) > 1:
            raise FsmError(f"state {sid} has {len(outs)} {kind} transitions")
        stack.append((sid, kind))

        def cont(t):
            chain = [ASSERTION_KINDS[k](n, End()) for k, n in t.annotations]
            return with_chain(chain, go(t.dst))

        try:
            if kind in CHOICE_KINDS:
                body = Choice(CHOICE_KINDS[kind], tuple((t.label, cont(t)) for t in outs))
            elif kind == "silent":
                body = cont(outs[0])
            else:
                body = Prefix(Action(ACTION_KINDS[kind], outs[0].label), cont(outs[0]))
        except ProtocolError as e:
            raise FsmError(f"state {sid}: {e}") from None
        stack.pop()
        if sid in looped:
            looped.discard(sid)
            body = Rec(var_of[sid], body)
        return body

    s = go(f.initial)
    problems = validate(s)
    if problems:
        raise FsmError(f"extracted protocol is invalid: {problems[0]}")
    return alpha_canonicalize(s)
