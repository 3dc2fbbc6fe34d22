"""SFILES 2.0 tokenizer and recursive parser.

Grammar::

    sfiles       := subprocess ("n|" subprocess)*
    subprocess   := element+
    element      := unit | tag | branch | incoming | recycle_ref | recycle_mark
    unit         := "(" name ")"
    tag          := "{" name "}"
    branch       := "[" element+ "]"
    incoming     := "<&|" element+ ("&" element+)* "&|"
    recycle_ref  := "<" int
    recycle_mark := int

Recycle numbers are single digits 1-9, or ``%`` followed by two digits.
An all-digit tag directly after a unit is a heat-integration label.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .graph import PROCESS, RECYCLE, FlowsheetGraph, GraphValidationError, StreamEdge, UnitNode, valid_category


class TokenKind(enum.Enum):
    UNIT = "unit"
    TAG = "tag"
    BRANCH_OPEN = "branch_open"
    BRANCH_CLOSE = "branch_close"
    INCOMING_OPEN = "incoming_open"
    INCOMING_SEP = "incoming_sep"
    INCOMING_CLOSE = "incoming_close"
    RECYCLE_REF = "recycle_ref"
    RECYCLE_MARK = "recycle_mark"
    SUBPROCESS_SEP = "subprocess_sep"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    start: int
    value: str | int | None = None

    @property
    def end(self) -> int:
        return self.start + len(self.text)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "text": self.text, "start": self.start, "value": self.value}


class ParseError(ValueError):
    def __init__(self, position: int, expected: str, found: str):
        shown = found if found == "end of input" else repr(found)
        super().__init__(f"at offset {position}: expected {expected}, found {shown}")
        self.position = position
        self.expected = expected
        self.found = found


_NAME_STOP = set("(){}[]<&|%")


def _read_name(text: str, i: int, close: str, what: str, allow_digits: bool) -> tuple[str, int]:
    j = i + 1
    while j < len(text) and text[j] != close:
        c = text[j]
        if c in _NAME_STOP or c.isspace() or (c.isdigit() and not allow_digits):
            raise ParseError(j, f"{what} name character or {close!r}", c)
        j += 1
    if j == len(text):
        raise ParseError(len(text), f"{close!r} closing {what} opened at {i}", "end of input")
    if j == i + 1:
        raise ParseError(j, f"non-empty {what} name", close)
    return text[i + 1:j], j + 1


def _read_number(text: str, i: int) -> tuple[int, int]:
    """Recycle number starting at ``text[i]``; returns (value, end)."""
    c = text[i] if i < len(text) else ""
    if c == "%":
        digits = text[i + 1:i + 3]
        if len(digits) != 2 or not (digits.isdigit() and digits.isascii()):
            raise ParseError(i, "two digits after '%'", text[i:i + 3])
        if int(digits) == 0:
            raise ParseError(i, "positive recycle number", text[i:i + 3])
        return int(digits), i + 3
    if c.isdigit() and c.isascii():
        if c == "0":
            raise ParseError(i, "positive recycle number", c)
        return int(c), i + 1
    raise ParseError(min(i, len(text)), "recycle number", c)


def tokenize(text: str) -> list[Token]:
    """Split an SFILES string into tokens.

    Offsets index into ``text`` itself; leading and trailing whitespace is
    skipped, so the token lexemes concatenate to ``text.strip()``.
    """
    end = len(text.rstrip())
    i = len(text) - len(text.lstrip()) if end else 0
    src = text[:end]
    tokens: list[Token] = []
    stack: list[Token] = []

    def emit(kind, start, stop, value=None):
        tok = Token(kind, src[start:stop], start, value)
        tokens.append(tok)
        return tok

    while i < end:
        c = src[i]
        if c == "(":
            name, j = _read_name(src, i, ")", "unit", allow_digits=False)
            emit(TokenKind.UNIT, i, j, name)
        elif c == "{":
            name, j = _read_name(src, i, "}", "tag", allow_digits=True)
            emit(TokenKind.TAG, i, j, name)
        elif c == "[":
            stack.append(emit(TokenKind.BRANCH_OPEN, i, i + 1))
            j = i + 1
        elif c == "]":
            if not stack or stack[-1].kind is not TokenKind.BRANCH_OPEN:
                raise ParseError(i, "matching '[' before ']'", c)
            stack.pop()
            emit(TokenKind.BRANCH_CLOSE, i, i + 1)
            j = i + 1
        elif c == "<":
            if src.startswith("<&|", i):
                stack.append(emit(TokenKind.INCOMING_OPEN, i, i + 3))
                j = i + 3
            else:
                try:
                    n, j = _read_number(src, i + 1)
                except ParseError as exc:
                    raise ParseError(min(exc.position, end - 1), "'<&|' or '<' followed by a recycle number",
                                     src[i:i + 3]) from None
                emit(TokenKind.RECYCLE_REF, i, j, n)
        elif c == "&":
            if not stack or stack[-1].kind is not TokenKind.INCOMING_OPEN:
                raise ParseError(i, "'&' only inside an incoming branch", c)
            if src.startswith("&|", i):
                stack.pop()
                emit(TokenKind.INCOMING_CLOSE, i, i + 2)
                j = i + 2
            else:
                emit(TokenKind.INCOMING_SEP, i, i + 1)
                j = i + 1
        elif c == "n":
            if not src.startswith("n|", i):
                raise ParseError(i, "'n|' subprocess separator", src[i:i + 2])
            emit(TokenKind.SUBPROCESS_SEP, i, i + 2)
            j = i + 2
        elif c == "%" or (c.isdigit() and c.isascii()):
            n, j = _read_number(src, i)
            emit(TokenKind.RECYCLE_MARK, i, j, n)
        else:
            raise ParseError(i, "SFILES token", c)
        i = j
    if stack:
        opener = stack[-1]
        raise ParseError(opener.start, f"closing delimiter for {opener.text!r}", opener.text)
    return tokens


_BRANCH, _INCOMING = "branch", "incoming"


class _Frame:
    __slots__ = ("kind", "anchor", "token", "has_content")

    def __init__(self, kind, anchor, token):
        self.kind = kind
        self.anchor = anchor
        self.token = token
        self.has_content = False


def parse(text: str) -> FlowsheetGraph:
    """Parse an SFILES string into a :class:`FlowsheetGraph`."""
    tokens = tokenize(text)
    if not tokens:
        raise ParseError(0, "at least one unit", text)

    categories: list[str] = []
    unit_tokens: list[Token] = []
    heat: dict[int, tuple[int, Token]] = {}
    edges: list[tuple[int, int, tuple[str, ...], str]] = []
    open_marks: dict[int, tuple[int, tuple[str, ...], Token]] = {}
    open_refs: dict[int, tuple[int, Token]] = {}
    frames: list[_Frame] = []
    current: int | None = None
    pending: list[str] = []
    pending_tok: Token | None = None
    prev: Token | None = None

    def no_pending(tok):
        if pending:
            raise ParseError(pending_tok.start, "a unit or recycle number after the stream tag", tok.text)

    def take_tags():
        nonlocal pending, pending_tok
        tags = tuple(pending)
        pending, pending_tok = [], None
        return tags

    def mark_content():
        if frames:
            frames[-1].has_content = True

    for tok in tokens:
        k = tok.kind
        if k is TokenKind.UNIT:
            if not valid_category(tok.value):
                raise ParseError(tok.start + 1, "unit category", tok.value)
            v = len(categories)
            categories.append(tok.value)
            unit_tokens.append(tok)
            if current is not None:
                edges.append((current, v, take_tags(), PROCESS))
            current = v
            mark_content()
        elif k is TokenKind.TAG:
            if current is None:
                raise ParseError(tok.start, "a unit before the tag", tok.text)
            if tok.value.isdigit():
                if prev is None or prev.kind is not TokenKind.UNIT or current in heat:
                    raise ParseError(tok.start, "heat-integration label directly after a unit", tok.text)
                heat[current] = (int(tok.value), tok)
            else:
                if tok.value in pending:
                    raise ParseError(tok.start, "distinct stream tags", tok.text)
                if not pending:
                    pending_tok = tok
                pending.append(tok.value)
        elif k is TokenKind.BRANCH_OPEN:
            if current is None:
                raise ParseError(tok.start, "a unit before the branch", tok.text)
            no_pending(tok)
            mark_content()
            frames.append(_Frame(_BRANCH, current, tok))
        elif k is TokenKind.BRANCH_CLOSE:
            no_pending(tok)
            frame = frames.pop()
            if not frame.has_content:
                raise ParseError(frame.token.start, "non-empty branch", "[]")
            current = frame.anchor
        elif k is TokenKind.INCOMING_OPEN:
            if current is None:
                raise ParseError(tok.start, "a unit before the incoming branch", tok.text)
            no_pending(tok)
            mark_content()
            frames.append(_Frame(_INCOMING, current, tok))
            current = None
        elif k in (TokenKind.INCOMING_SEP, TokenKind.INCOMING_CLOSE):
            frame = frames[-1]
            if current is None:
                raise ParseError(tok.start, "a unit inside the incoming branch", tok.text)
            edges.append((current, frame.anchor, take_tags(), PROCESS))
            if k is TokenKind.INCOMING_SEP:
                current = None
            else:
                frames.pop()
                current = frame.anchor
        elif k is TokenKind.RECYCLE_MARK:
            if current is None:
                raise ParseError(tok.start, "a unit before the recycle number", tok.text)
            n = tok.value
            if n in open_refs:
                dst, _ = open_refs.pop(n)
                edges.append((current, dst, take_tags(), RECYCLE))
            elif n in open_marks:
                raise ParseError(tok.start, f"recycle {n} to be closed before reuse", tok.text)
            else:
                open_marks[n] = (current, take_tags(), tok)
            mark_content()
        elif k is TokenKind.RECYCLE_REF:
            if current is None:
                raise ParseError(tok.start, "a unit before the recycle reference", tok.text)
            no_pending(tok)
            n = tok.value
            if n in open_marks:
                src, tags, _ = open_marks.pop(n)
                edges.append((src, current, tags, RECYCLE))
            elif n in open_refs:
                raise ParseError(tok.start, f"recycle {n} to be closed before reuse", tok.text)
            else:
                open_refs[n] = (current, tok)
            mark_content()
        elif k is TokenKind.SUBPROCESS_SEP:
            if frames:
                raise ParseError(tok.start, f"closing delimiter for {frames[-1].token.text!r}", tok.text)
            no_pending(tok)
            if current is None:
                raise ParseError(tok.start, "a unit before 'n|'", tok.text)
            current = None
        prev = tok

    last = tokens[-1]
    if pending:
        raise ParseError(pending_tok.start, "a unit or recycle number after the stream tag", pending_tok.text)
    if current is None:
        raise ParseError(last.start, "a unit after the subprocess separator", last.text)
    dangling = [t for _, _, t in open_marks.values()] + [t for _, t in open_refs.values()]
    if dangling:
        tok = min(dangling, key=lambda t: t.start)
        raise ParseError(tok.start, f"matching end for recycle {tok.value}", tok.text)

    return _build_graph(categories, unit_tokens, heat, edges)


def _build_graph(categories, unit_tokens, heat, edges) -> FlowsheetGraph:
    counters: dict[str, int] = {}
    groups: dict[int, tuple[str, int, list[int]]] = {}
    nodes = []
    for v, cat in enumerate(categories):
        if v in heat:
            label, tok = heat[v]
            if label not in groups:
                counters[cat] = counters.get(cat, 0) + 1
                groups[label] = (cat, counters[cat], [])
            gcat, no, members = groups[label]
            if gcat != cat:
                raise ParseError(tok.start, f"heat label {label} on a {gcat} unit", cat)
            members.append(v)
            nodes.append(UnitNode(cat, no, len(members)))
        else:
            counters[cat] = counters.get(cat, 0) + 1
            nodes.append(UnitNode(cat, counters[cat]))
    stream_edges = [StreamEdge(nodes[a].id, nodes[b].id, tags, kind) for a, b, tags, kind in edges]
    try:
        return FlowsheetGraph(tuple(nodes), tuple(stream_edges))
    except GraphValidationError as exc:
        # locate the offending unit for a positioned diagnostic
        for a, b, _, _ in edges:
            if categories[b] == "raw":
                tok = unit_tokens[b]
                raise ParseError(tok.start, "a raw unit without incoming streams", tok.text) from exc
            if categories[a] == "prod":
                tok = unit_tokens[a]
                raise ParseError(tok.start, "a prod unit without outgoing streams", tok.text) from exc
        raise ParseError(unit_tokens[0].start, exc.invariant, exc.detail) from exc
