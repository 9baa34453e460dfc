"""Context-sensitive completion over the textual syntax.

The engine answers one question: given a cursor position in a document,
which member keywords and which element templates may be inserted into
the enclosing container? Locating the container works on raw tokens with
brace balancing, so it stays usable while the line under the cursor is
half-typed. Proposals come in two flavours, plain keywords first and
whole-element templates second; templates carry ``${n:hint}`` blanks and
pre-fill mandatory cross-references with the first fitting target found
in the document.

Element numbering during the scan follows the textual start order of
elements, which for a clean document coincides with the pre-order ids
assigned by the parser.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .grammar import (
    Grammar,
    InlineContainment,
    KeywordAttribute,
    KeywordCrossRef,
    WrappedContainment,
)
from .metamodel import Attribute, CrossReference, Metamodel, PrimitiveKind
from .model import ReferenceCache, lookup_first_fitting
from .textsyntax import _RuleInfo, Token, lex

KEYWORD = "Keyword"
TEMPLATE = "Template"

_IDENT = PrimitiveKind.IDENTIFIER.value
_VALUE_KINDS = frozenset(k.value for k in PrimitiveKind)


@dataclass(frozen=True)
class Proposal:
    """One completion item: a keyword or a template snippet."""

    kind: str  # KEYWORD or TEMPLATE
    label: str
    insert_text: str


@dataclass(frozen=True)
class CursorContext:
    """Where the cursor sits: the innermost container and what it holds.

    ``kind`` is one of:

    - ``"element"``: inside the braces of an element body; ``class_name``
      is the element's class and ``element_id`` its pre-order number.
    - ``"wrapper"``: inside the braces of a wrapped containment member;
      ``class_name`` is the member's target class.
    - ``"top"``: outside every element; ``has_root`` says whether the
      document already carries a top-level element.
    """

    kind: str
    class_name: str | None = None
    element_id: int = 0
    members_present: frozenset[str] = frozenset()
    member: str | None = None
    has_root: bool = False


@dataclass
class _Frame:
    kind: str  # "element", "wrapper", "anon"
    open_offset: int
    close_offset: int | None = None
    class_name: str | None = None
    element_id: int = 0
    member: str | None = None
    present: set[str] = field(default_factory=set)


def _offset_of(text: str, line: int, column: int) -> int:
    """1-based line/column to a character offset, clamped to the text."""
    starts = [0]
    for idx, ch in enumerate(text):
        if ch == "\n":
            starts.append(idx + 1)
    if line < 1:
        return 0
    if line > len(starts):
        return len(text)
    return min(starts[line - 1] + max(column - 1, 0), len(text))


def _scan_frames(
    tokens: list[Token], g: Grammar, mm: Metamodel,
) -> tuple[list[_Frame], bool]:
    """Single pass over the tokens, building every brace frame.

    Returns the frames (open and closed alike) plus a flag telling
    whether a top-level element was seen. The scan is deliberately
    forgiving: unknown tokens are skipped and a stray open brace gets an
    anonymous frame so that balancing survives.
    """
    infos = {name: _RuleInfo(rule) for name, rule in g.rules.items()}
    class_of_keyword = {rule.keyword: name for name, rule in g.rules.items()}

    frames: list[_Frame] = []
    stack: list[_Frame] = []
    counter = 0
    saw_root = False
    i = 0
    n = len(tokens)

    def fits_here(top: _Frame | None, class_name: str) -> bool:
        if top is None or top.kind == "anon":
            return True
        if top.kind == "wrapper":
            return top.class_name is not None and mm.is_subtype(
                class_name, top.class_name
            )
        info = infos[top.class_name]  # type: ignore[index]
        return any(
            mm.is_subtype(class_name, e.target)
            for e in info.inline
            if e.target is not None
        )

    while i < n:
        tok = tokens[i]
        top = stack[-1] if stack else None

        if tok.kind == "}":
            if stack:
                stack.pop().close_offset = tok.offset
            i += 1
            continue
        if tok.kind in (",", "."):
            i += 1
            continue
        if tok.kind == "{":
            frame = _Frame("anon", open_offset=tok.offset)
            stack.append(frame)
            frames.append(frame)
            i += 1
            continue

        if tok.kind == _IDENT:
            word = tok.lexeme
            if top is not None and top.kind == "element":
                entry = infos[top.class_name].by_keyword.get(word)  # type: ignore[index]
                if entry is not None:
                    top.present.add(entry.member)
                    i += 1
                    form = entry.form
                    if isinstance(form, KeywordAttribute):
                        if i < n and tokens[i].kind in _VALUE_KINDS:
                            i += 1
                    elif isinstance(form, KeywordCrossRef):
                        if i < n and tokens[i].kind == _IDENT:
                            i += 1
                            while (
                                i + 1 < n
                                and tokens[i].kind == "."
                                and tokens[i + 1].kind == _IDENT
                            ):
                                i += 2
                    elif isinstance(form, WrappedContainment):
                        if i < n and tokens[i].kind == "{":
                            frame = _Frame(
                                "wrapper",
                                open_offset=tokens[i].offset,
                                class_name=form.target,
                                member=entry.member,
                                element_id=top.element_id,
                            )
                            stack.append(frame)
                            frames.append(frame)
                            i += 1
                    continue

            class_name = class_of_keyword.get(word)
            if class_name is not None and fits_here(top, class_name):
                counter += 1
                if top is None:
                    saw_root = True
                elif top.kind == "element":
                    info = infos[top.class_name]  # type: ignore[index]
                    for e in info.inline:
                        if e.target and mm.is_subtype(class_name, e.target):
                            top.present.add(e.member)
                            break
                rule = g.rules[class_name]
                i += 1
                if rule.name_inline and i < n and tokens[i].kind == _IDENT:
                    i += 1
                if i < n and tokens[i].kind == "{":
                    frame = _Frame(
                        "element",
                        open_offset=tokens[i].offset,
                        class_name=class_name,
                        element_id=counter,
                    )
                    stack.append(frame)
                    frames.append(frame)
                    i += 1
                continue

            if top is not None and top.kind == "element":
                info = infos[top.class_name]  # type: ignore[index]
                if info.positional is not None:
                    top.present.add(info.positional.member)
            i += 1
            continue

        # Remaining value tokens: a positional attribute if one exists.
        if top is not None and top.kind == "element" and tok.kind in _VALUE_KINDS:
            info = infos[top.class_name]  # type: ignore[index]
            if info.positional is not None:
                top.present.add(info.positional.member)
        i += 1

    return frames, saw_root


def locate_context_at(
    text: str, offset: int, g: Grammar, mm: Metamodel,
) -> CursorContext | None:
    """Context for a character offset; None when inside a string literal."""
    offset = max(0, min(offset, len(text)))
    tokens, _ = lex(text, g.terminal_patterns())

    for tok in tokens:
        if tok.kind == PrimitiveKind.STRING.value:
            if tok.offset < offset < tok.end_offset:
                return None

    frames, saw_root = _scan_frames(tokens, g, mm)

    best: _Frame | None = None
    for frame in frames:
        if frame.kind == "anon":
            continue
        if frame.open_offset < offset and (
            frame.close_offset is None or offset <= frame.close_offset
        ):
            if best is None or frame.open_offset > best.open_offset:
                best = frame

    if best is None:
        return CursorContext(kind="top", has_root=saw_root)
    if best.kind == "wrapper":
        return CursorContext(
            kind="wrapper",
            class_name=best.class_name,
            element_id=best.element_id,
            member=best.member,
        )
    return CursorContext(
        kind="element",
        class_name=best.class_name,
        element_id=best.element_id,
        members_present=frozenset(best.present),
    )


def locate_context(
    text: str, line: int, column: int, g: Grammar, mm: Metamodel,
) -> CursorContext | None:
    """Context for a 1-based line/column position."""
    return locate_context_at(text, _offset_of(text, line, column), g, mm)


# ---------------------------------------------------------------------------
# Proposal computation
# ---------------------------------------------------------------------------

def build_template(
    class_name: str, g: Grammar, mm: Metamodel, cache: ReferenceCache,
) -> str:
    """Element skeleton for a class: name blank plus the mandatory members.

    Mandatory attributes become ``keyword ${n:kind}`` blanks; mandatory
    cross-references are pre-filled with the first fitting target from
    the cache and fall back to a ``${n:TargetClass}`` blank. Mandatory
    containments are left out; a skeleton cannot pick a child class.
    """
    rule = g.rules[class_name]
    counter = 1
    header = rule.keyword
    name_member = mm.name_slot_of(class_name)

    if rule.name_inline:
        header += f" ${{{counter}:name}}"
        counter += 1

    lines: list[str] = []
    if not rule.name_inline and name_member is not None:
        entry = rule.entry_for(name_member.name)
        if entry is not None and isinstance(entry.form, KeywordAttribute):
            if entry.form.keyword is not None:
                lines.append(f"{entry.form.keyword} ${{{counter}:name}}")
            else:
                lines.append(f"${{{counter}:name}}")
            counter += 1

    mandatory = {m.name for m in mm.mandatory_members(class_name)}
    for entry in rule.entries:
        if entry.member not in mandatory:
            continue
        form = entry.form
        if isinstance(form, KeywordAttribute):
            kind = form.kind.value
            if form.keyword is None:
                lines.append(f"${{{counter}:{kind}}}")
            else:
                lines.append(f"{form.keyword} ${{{counter}:{kind}}}")
            counter += 1
        elif isinstance(form, KeywordCrossRef):
            found = None if cache is None else lookup_first_fitting(cache, form.target)
            if found is not None:
                lines.append(f"{form.keyword} {found.dotted}")
            else:
                lines.append(f"{form.keyword} ${{{counter}:{form.target}}}")
                counter += 1

    if not lines and rule.body_optional:
        return header
    body = "\n".join("    " + line for line in lines)
    if body:
        return f"{header}\n{{\n{body}\n}}"
    return f"{header}\n{{\n}}"


def _class_proposals(
    classes: list[str], g: Grammar, mm: Metamodel, cache: ReferenceCache,
) -> tuple[list[Proposal], list[Proposal]]:
    keywords = [
        Proposal(KEYWORD, g.rules[c].keyword, g.rules[c].keyword) for c in classes
    ]
    templates = [
        Proposal(TEMPLATE, g.rules[c].keyword, build_template(c, g, mm, cache))
        for c in classes
    ]
    return keywords, templates


def complete(
    ctx: CursorContext | None,
    g: Grammar,
    mm: Metamodel,
    cache: ReferenceCache,
) -> list[Proposal]:
    """Ordered proposals for a context: keywords first, templates after.

    Repeatable members are always offered; single-valued members only
    while absent. Containment entries fan out to the concrete subclasses
    of their target, alphabetically, deduplicated across entries.
    """
    if ctx is None:
        return []

    if ctx.kind == "top":
        if ctx.has_root or g.root_rule not in g.rules:
            return []
        kws, tpls = _class_proposals([g.root_rule], g, mm, cache)
        return kws + tpls

    if ctx.kind == "wrapper":
        if ctx.class_name is None:
            return []
        classes = sorted(mm.concrete_subclasses(ctx.class_name))
        kws, tpls = _class_proposals(classes, g, mm, cache)
        return kws + tpls

    rule = g.rules.get(ctx.class_name or "")
    if rule is None:
        return []

    keyword_items: list[Proposal] = []
    template_classes: list[str] = []
    seen_classes: set[str] = set()

    for entry in rule.entries:
        addable = entry.repeatable or entry.member not in ctx.members_present
        if not addable:
            continue
        form = entry.form
        if isinstance(form, InlineContainment):
            for cls in sorted(mm.concrete_subclasses(form.target)):
                if cls in seen_classes:
                    continue
                seen_classes.add(cls)
                kw = g.rules[cls].keyword
                keyword_items.append(Proposal(KEYWORD, kw, kw))
                template_classes.append(cls)
        elif isinstance(form, KeywordAttribute):
            if form.keyword is not None:
                keyword_items.append(Proposal(KEYWORD, form.keyword, form.keyword))
        else:  # KeywordCrossRef or WrappedContainment
            keyword_items.append(Proposal(KEYWORD, form.keyword, form.keyword))

    templates = [
        Proposal(TEMPLATE, g.rules[c].keyword, build_template(c, g, mm, cache))
        for c in template_classes
    ]
    return keyword_items + templates
