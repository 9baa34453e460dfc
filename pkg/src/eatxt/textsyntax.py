"""Lexing, parsing and pretty-printing of textual instance models.

The lexer knows five value terminals plus four punctuation marks and line
comments. Keywords are not a lexical category: every word comes out as an
Identifier token and the parser promotes it by context, so member names
never clash with class names.

The parser is a recursive-descent interpreter over the grammar IR. It is
deliberately forgiving: every problem becomes a diagnostic with a span,
and an unparseable construct is skipped as a whole so that one typo does
not cascade. The formatter is the inverse direction and defines the
canonical layout: four-space indents, braces on their own lines, one
construct per line. Formatting canonical text is the identity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import ConfigError, Diagnostic, ERROR, SerializationError, Span, WARNING
from .grammar import (
    Grammar,
    InlineContainment,
    KeywordAttribute,
    KeywordCrossRef,
    MemberEntry,
    ProductionRule,
    TerminalRule,
    WrappedContainment,
)
from .metamodel import Metamodel, PrimitiveKind
from .model import CrossRef, ModelElement, QualifiedName, assign_preorder_ids

INDENT = "    "
PUNCT = "{},."

# When two terminals match the same longest lexeme, the earlier kind wins.
_PRIORITY = [
    PrimitiveKind.UUID,
    PrimitiveKind.NUMERICAL,
    PrimitiveKind.BOOLEAN,
    PrimitiveKind.STRING,
    PrimitiveKind.IDENTIFIER,
]


@dataclass(frozen=True)
class Token:
    kind: str  # a PrimitiveKind value name, or one of "{", "}", ",", "."
    lexeme: str
    span: Span
    offset: int  # start offset in the source text

    @property
    def end_offset(self) -> int:
        return self.offset + len(self.lexeme)


class _LineIndex:
    """Offset to 1-based (line, col) translation."""

    def __init__(self, text: str):
        self.starts = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                self.starts.append(i + 1)

    def position(self, offset: int) -> tuple[int, int]:
        lo, hi = 0, len(self.starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.starts[mid] <= offset:
                lo = mid
            else:
                hi = mid - 1
        return lo + 1, offset - self.starts[lo] + 1

    def span(self, start: int, end: int) -> Span:
        line, col = self.position(start)
        end_line, end_col = self.position(end)
        return Span(line, col, end_line, end_col)


def _normalize_terminals(
    terminals: list[TerminalRule] | dict[PrimitiveKind, str],
) -> dict[PrimitiveKind, str]:
    if isinstance(terminals, dict):
        patterns = dict(terminals)
    else:
        patterns = {t.kind: t.pattern for t in terminals}
    missing = [k.value for k in PrimitiveKind if k not in patterns]
    if missing:
        raise ConfigError(
            "lexer needs a pattern for every terminal kind; missing: "
            + ", ".join(missing)
        )
    return patterns


def lex(
    text: str,
    terminals: list[TerminalRule] | dict[PrimitiveKind, str],
) -> tuple[list[Token], list[Diagnostic]]:
    """Tokenize with longest-match semantics.

    An unlexable character yields one error diagnostic; scanning resumes
    at the next whitespace. ``//`` comments are dropped.
    """
    patterns = _normalize_terminals(terminals)
    compiled = [(kind, re.compile(patterns[kind])) for kind in _PRIORITY]
    index = _LineIndex(text)
    tokens: list[Token] = []
    diagnostics: list[Diagnostic] = []

    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch in " \t\r\n":
            pos += 1
            continue
        if text.startswith("//", pos):
            nl = text.find("\n", pos)
            pos = n if nl == -1 else nl + 1
            continue
        if ch in PUNCT:
            tokens.append(Token(ch, ch, index.span(pos, pos + 1), pos))
            pos += 1
            continue

        best: tuple[PrimitiveKind, str] | None = None
        for kind, pattern in compiled:
            m = pattern.match(text, pos)
            if m and m.end() > pos:
                lexeme = m.group()
                if best is None or len(lexeme) > len(best[1]):
                    best = (kind, lexeme)
        if best is None:
            diagnostics.append(Diagnostic(
                ERROR,
                f"cannot read character {ch!r}",
                index.span(pos, pos + 1),
            ))
            while pos < n and text[pos] not in " \t\r\n":
                pos += 1
            continue
        kind, lexeme = best
        tokens.append(Token(
            kind.value, lexeme, index.span(pos, pos + len(lexeme)), pos,
        ))
        pos += len(lexeme)

    return tokens, diagnostics


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _is_name_slot_entry(entry: MemberEntry) -> bool:
    return (
        entry.member == "shortName"
        and isinstance(entry.form, KeywordAttribute)
        and entry.form.kind is PrimitiveKind.IDENTIFIER
    )


class _RuleInfo:
    """Per-rule dispatch tables, built once per parse."""

    def __init__(self, rule: ProductionRule):
        self.rule = rule
        self.by_keyword: dict[str, MemberEntry] = {}
        self.inline: list[MemberEntry] = []
        self.positional: MemberEntry | None = None
        for entry in rule.entries:
            form = entry.form
            if isinstance(form, InlineContainment):
                self.inline.append(entry)
            elif isinstance(form, KeywordAttribute) and form.keyword is None:
                self.positional = entry
            else:
                keyword = form.keyword  # type: ignore[union-attr]
                self.by_keyword[keyword] = entry


class _Parser:
    def __init__(self, tokens: list[Token], g: Grammar, mm: Metamodel):
        self.tokens = tokens
        self.i = 0
        self.g = g
        self.mm = mm
        self.diagnostics: list[Diagnostic] = []
        self.rules = {name: _RuleInfo(rule) for name, rule in g.rules.items()}
        self.class_keywords = {rule.keyword: name for name, rule in g.rules.items()}

    # -- token access -------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token | None:
        j = self.i + ahead
        return self.tokens[j] if j < len(self.tokens) else None

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, span: Span) -> None:
        self.diagnostics.append(Diagnostic(ERROR, message, span))

    def warning(self, message: str, span: Span) -> None:
        self.diagnostics.append(Diagnostic(WARNING, message, span))

    def _last_span(self) -> Span:
        if self.tokens:
            tok = self.tokens[min(self.i, len(self.tokens) - 1)]
            return tok.span
        return Span(1, 1, 1, 1)

    # -- document -----------------------------------------------------------

    def parse_document(self) -> ModelElement | None:
        tok = self.peek()
        if tok is None:
            self.error("empty document: expected an element", Span(1, 1, 1, 1))
            return None
        if tok.kind != "Identifier" or tok.lexeme not in self.class_keywords:
            self.error(
                f"expected an element, got '{tok.lexeme}'", tok.span,
            )
            return None
        root = self.parse_element(self.class_keywords[tok.lexeme])
        extra = self.peek()
        if extra is not None:
            self.error(
                f"unexpected text after the top-level element: '{extra.lexeme}'",
                extra.span,
            )
        return root

    # -- elements -----------------------------------------------------------

    def parse_element(self, class_name: str) -> ModelElement:
        info = self.rules[class_name]
        rule = info.rule
        keyword_tok = self.advance()
        el = ModelElement(class_name=class_name, span=keyword_tok.span)

        if rule.name_inline:
            tok = self.peek()
            if tok is not None and tok.kind == "Identifier":
                el.short_name = self.advance().lexeme
            else:
                self.error(
                    f"expected a name after '{rule.keyword}'",
                    tok.span if tok else keyword_tok.span,
                )

        tok = self.peek()
        if tok is not None and tok.kind == "{":
            self.advance()
            self.parse_body(el, info)
        elif not rule.body_optional:
            self.error(
                f"expected '{{' to open the body of '{rule.keyword}'",
                tok.span if tok else keyword_tok.span,
            )

        self.check_lower_bounds(el, info)
        return el

    def parse_body(self, el: ModelElement, info: _RuleInfo) -> None:
        counts: dict[str, int] = {}
        seen_blocks: set[str] = set()
        while True:
            tok = self.peek()
            if tok is None:
                self.error(
                    f"unexpected end of file inside '{info.rule.keyword}'",
                    self._last_span(),
                )
                return
            if tok.kind == "}":
                self.advance()
                return
            self.parse_member_line(el, info, counts, seen_blocks)

    def parse_member_line(
        self,
        el: ModelElement,
        info: _RuleInfo,
        counts: dict[str, int],
        seen_blocks: set[str],
    ) -> None:
        tok = self.peek()
        assert tok is not None
        rule = info.rule

        if tok.kind == "Identifier":
            entry = info.by_keyword.get(tok.lexeme)
            if entry is not None:
                self.parse_keyworded_member(el, entry, counts, seen_blocks)
                return
            child_class = self.class_keywords.get(tok.lexeme)
            if child_class is not None:
                self.parse_inline_child(el, info, child_class, counts)
                return
            if (
                info.positional is not None
                and info.positional.form.kind is PrimitiveKind.IDENTIFIER  # type: ignore[union-attr]
            ):
                self.take_positional(el, info.positional, counts)
                return
            expected = list(info.by_keyword)
            for entry in info.inline:
                expected.extend(sorted(
                    self.g.rules[c].keyword
                    for c in self.mm.concrete_subclasses(entry.form.target)  # type: ignore[union-attr]
                    if c in self.g.rules
                ))
            self.error(
                f"unknown keyword '{tok.lexeme}' in '{rule.keyword}'; "
                "expected one of: " + ", ".join(expected),
                tok.span,
            )
            self.skip_construct(info)
            return

        if tok.kind in ("String", "Boolean", "Numerical", "UUID"):
            pos = info.positional
            if pos is not None and pos.form.kind.value == tok.kind:  # type: ignore[union-attr]
                self.take_positional(el, pos, counts)
            else:
                self.error(
                    f"unexpected value '{tok.lexeme}' in '{rule.keyword}'",
                    tok.span,
                )
                self.advance()
            return

        # Stray punctuation at body level.
        self.error(f"unexpected '{tok.lexeme}' in '{rule.keyword}'", tok.span)
        self.advance()

    # -- member forms ---------------------------------------------------------

    def bump(
        self, el: ModelElement, entry: MemberEntry, counts: dict[str, int], span: Span,
    ) -> bool:
        """Count one occurrence; report a violated upper bound."""
        member = self.mm.member_of(el.class_name, entry.member)
        n = counts.get(entry.member, 0) + 1
        counts[entry.member] = n
        upper = member.upper if member is not None else None
        if upper is not None and n > upper:
            if upper == 1:
                self.error(f"duplicate member '{entry.member}'", span)
            else:
                self.error(
                    f"member '{entry.member}' allows at most {upper} values",
                    span,
                )
            return False
        return True

    def parse_keyworded_member(
        self,
        el: ModelElement,
        entry: MemberEntry,
        counts: dict[str, int],
        seen_blocks: set[str],
    ) -> None:
        keyword_tok = self.advance()
        form = entry.form

        if isinstance(form, KeywordAttribute):
            self.parse_attribute_value(el, entry, keyword_tok, counts)
            return

        if isinstance(form, KeywordCrossRef):
            qn, span = self.parse_qualified_name(keyword_tok)
            if qn is not None and self.bump(el, entry, counts, keyword_tok.span):
                el.cross_refs.append(CrossRef(entry.member, qn, span=span))
            return

        # Wrapped containment: keyword { child ("," child)* }
        if entry.member in seen_blocks:
            self.error(f"duplicate '{entry.member}' block", keyword_tok.span)
        seen_blocks.add(entry.member)
        tok = self.peek()
        if tok is None or tok.kind != "{":
            self.error(
                f"expected '{{' after '{entry.member}'",
                tok.span if tok else keyword_tok.span,
            )
            return
        self.advance()
        accepted = set(self.mm.concrete_subclasses(form.target))
        while True:
            tok = self.peek()
            if tok is None:
                self.error(
                    f"unexpected end of file inside '{entry.member}' block",
                    self._last_span(),
                )
                return
            if tok.kind == "}":
                self.advance()
                return
            if tok.kind == ",":
                self.advance()
                continue
            child_class = (
                self.class_keywords.get(tok.lexeme)
                if tok.kind == "Identifier" else None
            )
            if child_class is None or child_class not in accepted:
                self.error(
                    f"'{entry.member}' accepts {form.target} elements, "
                    f"got '{tok.lexeme}'",
                    tok.span,
                )
                self.skip_construct()
                continue
            child = self.parse_element(child_class)
            if self.bump(el, entry, counts, child.span or tok.span):
                el.children.append((entry.member, child))

    def parse_attribute_value(
        self,
        el: ModelElement,
        entry: MemberEntry,
        keyword_tok: Token,
        counts: dict[str, int],
    ) -> None:
        kind: PrimitiveKind = entry.form.kind  # type: ignore[union-attr]
        article = "an" if kind is PrimitiveKind.IDENTIFIER else "a"
        tok = self.peek()
        if tok is None or tok.kind in PUNCT:
            self.error(
                f"expected {article} {kind.value} value for '{entry.member}'",
                tok.span if tok else keyword_tok.span,
            )
            return
        tok = self.advance()
        if tok.kind != kind.value:
            self.error(
                f"expected {article} {kind.value} value for '{entry.member}', "
                f"got {tok.kind} '{tok.lexeme}'",
                tok.span,
            )
            return
        if not self.bump(el, entry, counts, tok.span):
            return
        self.store_attribute(el, entry, tok.lexeme)

    def take_positional(
        self, el: ModelElement, entry: MemberEntry, counts: dict[str, int],
    ) -> None:
        tok = self.advance()
        if self.bump(el, entry, counts, tok.span):
            self.store_attribute(el, entry, tok.lexeme)

    def store_attribute(self, el: ModelElement, entry: MemberEntry, lexeme: str) -> None:
        if _is_name_slot_entry(entry):
            el.short_name = lexeme
        else:
            el.attributes.append((entry.member, lexeme))

    def parse_qualified_name(
        self, keyword_tok: Token,
    ) -> tuple[QualifiedName | None, Span]:
        tok = self.peek()
        if tok is None or tok.kind != "Identifier":
            self.error(
                "expected a qualified name after "
                f"'{keyword_tok.lexeme}'",
                tok.span if tok else keyword_tok.span,
            )
            return None, keyword_tok.span
        first = self.advance()
        segments = [first.lexeme]
        last = first
        while True:
            tok = self.peek()
            if tok is None or tok.kind != ".":
                break
            self.advance()
            tok = self.peek()
            if tok is None or tok.kind != "Identifier":
                self.error(
                    "qualified name ends with '.'",
                    tok.span if tok else last.span,
                )
                break
            last = self.advance()
            segments.append(last.lexeme)
        span = Span(
            first.span.line, first.span.col, last.span.end_line, last.span.end_col,
        )
        return QualifiedName(tuple(segments)), span

    def parse_inline_child(
        self,
        el: ModelElement,
        info: _RuleInfo,
        child_class: str,
        counts: dict[str, int],
    ) -> None:
        tok = self.peek()
        assert tok is not None
        fitting = [
            e for e in info.inline
            if self.mm.is_subtype(child_class, e.form.target)  # type: ignore[union-attr]
        ]
        if not fitting:
            self.error(
                f"'{info.rule.keyword}' has no containment that accepts "
                f"{child_class}",
                tok.span,
            )
            self.parse_element(child_class)  # consume the whole subtree
            return
        if len(fitting) > 1:
            names = ", ".join(e.member for e in fitting)
            self.warning(
                f"{child_class} fits several containments ({names}); "
                f"using '{fitting[0].member}'",
                tok.span,
            )
        entry = fitting[0]
        child = self.parse_element(child_class)
        if self.bump(el, entry, counts, child.span or tok.span):
            el.children.append((entry.member, child))

    # -- bookkeeping ----------------------------------------------------------

    def check_lower_bounds(self, el: ModelElement, info: _RuleInfo) -> None:
        present: dict[str, int] = {}
        for member, _ in el.attributes:
            present[member] = present.get(member, 0) + 1
        for ref in el.cross_refs:
            present[ref.member] = present.get(ref.member, 0) + 1
        for member, _ in el.children:
            present[member] = present.get(member, 0) + 1
        if el.short_name is not None:
            present["shortName"] = 1

        for entry in info.rule.entries:
            member = self.mm.member_of(el.class_name, entry.member)
            lower = member.lower if member is not None else (0 if entry.optional else 1)
            if present.get(entry.member, 0) < lower:
                self.error(
                    f"missing mandatory member '{entry.member}' "
                    f"in '{info.rule.keyword}'",
                    el.span or Span(1, 1, 1, 1),
                )

    def skip_construct(self, info: _RuleInfo | None = None) -> None:
        """Drop an unrecognized construct without flooding diagnostics.

        Consumes the offending token and everything up to the next point
        where a construct can start: a member keyword of the enclosing
        rule, a class keyword, a comma, or the closing brace. A braced
        block on the way is swallowed whole.
        """
        self.advance()
        while True:
            tok = self.peek()
            if tok is None or tok.kind in ("}", ","):
                return
            if tok.kind == "{":
                depth = 0
                while True:
                    tok = self.peek()
                    if tok is None:
                        return
                    self.advance()
                    if tok.kind == "{":
                        depth += 1
                    elif tok.kind == "}":
                        depth -= 1
                        if depth == 0:
                            return
            if tok.kind == "Identifier":
                if info is not None and tok.lexeme in info.by_keyword:
                    return
                if tok.lexeme in self.class_keywords:
                    return
            self.advance()


def parse_model(
    text: str, g: Grammar, mm: Metamodel,
) -> tuple[ModelElement | None, list[Diagnostic]]:
    """Parse one top-level element. Always returns every diagnostic found;
    the tree is best-effort and is None only when nothing parseable was
    present at the top level."""
    tokens, diagnostics = lex(text, g.terminal_patterns())
    parser = _Parser(tokens, g, mm)
    root = parser.parse_document()
    diagnostics.extend(parser.diagnostics)
    if root is not None:
        assign_preorder_ids(root)
    return root, diagnostics


# ---------------------------------------------------------------------------
# Formatting
# ---------------------------------------------------------------------------

def _attribute_lines(el: ModelElement, rule: ProductionRule) -> list[str]:
    lines: list[str] = []
    for entry in rule.entries:
        form = entry.form
        if isinstance(form, KeywordAttribute):
            if _is_name_slot_entry(entry):
                if el.short_name is not None:
                    lines.append(f"shortName {el.short_name}")
                continue
            for value in el.attribute_values(entry.member):
                if value == '""':
                    continue  # empty strings are dropped from text
                if form.keyword is None:
                    lines.append(value)
                else:
                    lines.append(f"{form.keyword} {value}")
        elif isinstance(form, KeywordCrossRef):
            for ref in el.cross_refs:
                if ref.member == entry.member:
                    lines.append(f"{form.keyword} {ref.target.dotted}")
    return lines


def _format_element(el: ModelElement, g: Grammar, indent: int, out: list[str]) -> None:
    rule = g.rules.get(el.class_name)
    if rule is None:
        raise SerializationError(f"no production rule for class '{el.class_name}'")
    pad = INDENT * indent

    header = rule.keyword
    if rule.name_inline and el.short_name:
        header += f" {el.short_name}"

    body: list[str] = [pad + INDENT + line for line in _attribute_lines(el, rule)]

    # Children in document order. Consecutive children of one wrapped member
    # share a single keyword block; inline children print directly.
    runs: list[tuple[str, list[ModelElement]]] = []
    for member, child in el.children:
        if runs and runs[-1][0] == member:
            runs[-1][1].append(child)
        else:
            runs.append((member, [child]))
    for member, children in runs:
        entry = rule.entry_for(member)
        if entry is None:
            raise SerializationError(
                f"class '{el.class_name}' has no grammar entry for "
                f"containment '{member}'"
            )
        if isinstance(entry.form, InlineContainment):
            for child in children:
                _format_element(child, g, indent + 1, body)
        else:
            form = entry.form
            assert isinstance(form, WrappedContainment)
            body.append(pad + INDENT + form.keyword)
            body.append(pad + INDENT + "{")
            for pos, child in enumerate(children):
                if pos and form.comma_separated:
                    body.append(pad + INDENT * 2 + ",")
                _format_element(child, g, indent + 2, body)
            body.append(pad + INDENT + "}")

    if not body and rule.body_optional:
        out.append(pad + header)
        return
    out.append(pad + header)
    out.append(pad + "{")
    out.extend(body)
    out.append(pad + "}")


def format_model(root: ModelElement, g: Grammar) -> str:
    """Canonical text for a model tree. Ends with a newline."""
    out: list[str] = []
    _format_element(root, g, 0, out)
    return "\n".join(out) + "\n"
