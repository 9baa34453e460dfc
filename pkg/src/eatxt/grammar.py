"""Grammar IR, generation from a metamodel, and config-driven adaptation.

A Grammar is a set of production rules, one per concrete metamodel class,
plus explicitly defined terminals. Freshly generated grammars mirror the
metamodel one-to-one: every member keeps its keyword, containments are
wrapped in braces with comma separators, and no terminals are defined.
An adaptation config then rewrites the rules into the shape users type:
names hoisted onto the header line, containments unfolded, bodies made
optional, terminals pinned down.

Terminals that a config leaves undefined fall back to the builtin default
patterns at lexing time, so a short config is enough to obtain a usable
language. The emitted grammar text marks such terminals with a comment.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field

from .diagnostics import ConfigError, GrammarError
from .metamodel import (
    Attribute,
    Containment,
    CrossReference,
    Metamodel,
    PrimitiveKind,
)

# Type names as they appear in emitted grammar text. Strings use the
# "String0" spelling common in grammars derived from EMF models, where the
# plain name is reserved.
GRAMMAR_TYPE_NAMES: dict[PrimitiveKind, str] = {
    PrimitiveKind.IDENTIFIER: "Identifier",
    PrimitiveKind.STRING: "String0",
    PrimitiveKind.BOOLEAN: "Boolean",
    PrimitiveKind.NUMERICAL: "Numerical",
    PrimitiveKind.UUID: "UUID",
}

# Builtin terminal patterns, used whenever a grammar does not define its
# own. Numerical combines binary, octal, hex and decimal notations.
DEFAULT_TERMINAL_PATTERNS: dict[PrimitiveKind, str] = {
    PrimitiveKind.IDENTIFIER: r"[A-Za-z_][A-Za-z0-9_]*",
    PrimitiveKind.STRING: r'"(\\.|[^"\\\n])*"',
    PrimitiveKind.BOOLEAN: r"true|false",
    PrimitiveKind.NUMERICAL: (
        r"0b[01]+|0o[0-7]+|0x[0-9A-Fa-f]+"
        r"|[+-]?[0-9]+(\.[0-9]+)?([eE][+-]?[0-9]+)?"
    ),
    PrimitiveKind.UUID: (
        r"[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}"
        r"-[0-9a-fA-F]{4}-[0-9a-fA-F]{12}"
    ),
}


# ---------------------------------------------------------------------------
# IR types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TerminalRule:
    kind: PrimitiveKind
    pattern: str


@dataclass
class KeywordAttribute:
    """Primitive-valued member. keyword is None once it has been removed,
    which makes the value positional."""

    keyword: str | None
    kind: PrimitiveKind


@dataclass
class KeywordCrossRef:
    keyword: str
    target: str


@dataclass
class WrappedContainment:
    """Containment written as ``keyword { child, child }``."""

    keyword: str
    target: str
    braces: bool = True
    comma_separated: bool = True


@dataclass
class InlineContainment:
    """Containment written directly as child elements in the parent body."""

    target: str


EntryForm = KeywordAttribute | KeywordCrossRef | WrappedContainment | InlineContainment


@dataclass
class MemberEntry:
    member: str
    form: EntryForm
    optional: bool
    repeatable: bool

    @property
    def target(self) -> str | None:
        form = self.form
        if isinstance(form, (KeywordCrossRef, WrappedContainment, InlineContainment)):
            return form.target
        return None


@dataclass
class ProductionRule:
    class_name: str
    keyword: str
    name_inline: bool
    body_optional: bool
    entries: list[MemberEntry]

    def entry_for(self, member: str) -> MemberEntry | None:
        for e in self.entries:
            if e.member == member:
                return e
        return None


@dataclass
class Grammar:
    rules: dict[str, ProductionRule]
    terminals: list[TerminalRule]
    root_rule: str

    def terminal_patterns(self) -> dict[PrimitiveKind, str]:
        """Effective pattern per kind: explicit terminals over the builtins."""
        patterns = dict(DEFAULT_TERMINAL_PATTERNS)
        for t in self.terminals:
            patterns[t.kind] = t.pattern
        return patterns

    def defined_kinds(self) -> set[PrimitiveKind]:
        return {t.kind for t in self.terminals}

    def used_kinds(self) -> set[PrimitiveKind]:
        used: set[PrimitiveKind] = set()
        for rule in self.rules.values():
            if rule.name_inline:
                used.add(PrimitiveKind.IDENTIFIER)
            for entry in rule.entries:
                if isinstance(entry.form, KeywordAttribute):
                    used.add(entry.form.kind)
        return used


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

def generate_grammar(mm: Metamodel) -> Grammar:
    """Derive the unadapted grammar: one rule per concrete class, keyword
    per member, braced containments, no terminals."""
    root = mm.classes.get(mm.root_class)
    if root is None or root.abstract:
        raise GrammarError(f"metamodel has no concrete root class ('{mm.root_class}')")

    rules: dict[str, ProductionRule] = {}
    for cls in mm.classes.values():
        if cls.abstract:
            continue
        entries: list[MemberEntry] = []
        for m in mm.flatten_members(cls.name):
            if isinstance(m.kind, Attribute):
                form: EntryForm = KeywordAttribute(m.name, m.kind.kind)
            elif isinstance(m.kind, CrossReference):
                form = KeywordCrossRef(m.name, m.kind.target)
            else:
                if not mm.concrete_subclasses(m.kind.target):
                    raise GrammarError(
                        f"containment '{cls.name}.{m.name}' targets "
                        f"'{m.kind.target}', which has no concrete subclass"
                    )
                form = WrappedContainment(m.name, m.kind.target)
            entries.append(
                MemberEntry(m.name, form, optional=m.lower == 0, repeatable=m.multi)
            )
        rules[cls.name] = ProductionRule(
            class_name=cls.name,
            keyword=cls.name,
            name_inline=False,
            body_optional=False,
            entries=entries,
        )
    return Grammar(rules=rules, terminals=[], root_rule=mm.root_class)


# ---------------------------------------------------------------------------
# Adaptation directives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DefineTerminal:
    kind: PrimitiveKind
    pattern: str


@dataclass(frozen=True)
class HoistShortName:
    class_glob: str


@dataclass(frozen=True)
class UnfoldContainment:
    class_glob: str
    member_glob: str


@dataclass(frozen=True)
class OptionalBody:
    class_glob: str


@dataclass(frozen=True)
class RemoveAttributeKeyword:
    class_glob: str
    member_glob: str


Directive = (
    DefineTerminal | HoistShortName | UnfoldContainment | OptionalBody
    | RemoveAttributeKeyword
)


@dataclass
class AdaptationConfig:
    directives: list[Directive] = field(default_factory=list)


def render_directive(d: Directive) -> str:
    """Config-file spelling of a directive, used in reports and errors."""
    if isinstance(d, DefineTerminal):
        return f"define-terminal {d.kind.value} /{d.pattern}/"
    if isinstance(d, HoistShortName):
        return f"hoist-short-name {d.class_glob}"
    if isinstance(d, UnfoldContainment):
        return f"unfold-containment {d.class_glob} {d.member_glob}"
    if isinstance(d, OptionalBody):
        return f"optional-body {d.class_glob}"
    return f"remove-attribute-keyword {d.class_glob} {d.member_glob}"


def _compile_glob(glob: str) -> re.Pattern[str]:
    return re.compile(
        "".join(".*" if ch == "*" else re.escape(ch) for ch in glob) + r"\Z"
    )


def _check_glob(glob: str, line_no: int) -> str:
    if not glob:
        raise ConfigError(f"line {line_no}: empty glob")
    for ch in glob:
        if not (ch.isalnum() or ch in "_*"):
            raise ConfigError(
                f"line {line_no}: bad character '{ch}' in glob '{glob}' "
                "(only letters, digits, '_' and '*' are allowed)"
            )
    return glob


_KIND_BY_NAME = {k.value: k for k in PrimitiveKind}


def parse_config(text: str) -> AdaptationConfig:
    """Parse an adaptation config. One directive per line, '#' lines and
    blank lines ignored. Errors carry the offending line number."""
    directives: list[Directive] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        words = line.split()
        name = words[0]

        if name == "define-terminal":
            if len(words) < 2:
                raise ConfigError(f"line {line_no}: define-terminal needs a kind")
            kind = _KIND_BY_NAME.get(words[1])
            if kind is None:
                raise ConfigError(
                    f"line {line_no}: unknown terminal kind '{words[1]}' "
                    f"(expected one of {', '.join(_KIND_BY_NAME)})"
                )
            rest = line.split(None, 2)[2] if len(words) >= 3 else ""
            first = rest.find("/")
            last = rest.rfind("/")
            if first == -1 or last == first:
                raise ConfigError(
                    f"line {line_no}: define-terminal pattern must be "
                    "written between slashes"
                )
            if rest[:first].strip() or rest[last + 1:].strip():
                raise ConfigError(f"line {line_no}: trailing text after pattern")
            pattern = rest[first + 1:last]
            if not pattern:
                raise ConfigError(f"line {line_no}: empty terminal pattern")
            try:
                re.compile(pattern)
            except re.error as exc:
                raise ConfigError(
                    f"line {line_no}: bad pattern for {kind.value}: {exc}"
                ) from None
            directives.append(DefineTerminal(kind, pattern))
            continue

        arity = {
            "hoist-short-name": 1,
            "unfold-containment": 2,
            "optional-body": 1,
            "remove-attribute-keyword": 2,
        }.get(name)
        if arity is None:
            raise ConfigError(f"line {line_no}: unknown directive '{name}'")
        if len(words) != 1 + arity:
            raise ConfigError(
                f"line {line_no}: {name} takes {arity} argument(s), "
                f"got {len(words) - 1}"
            )
        globs = [_check_glob(w, line_no) for w in words[1:]]
        if name == "hoist-short-name":
            directives.append(HoistShortName(globs[0]))
        elif name == "unfold-containment":
            directives.append(UnfoldContainment(globs[0], globs[1]))
        elif name == "optional-body":
            directives.append(OptionalBody(globs[0]))
        else:
            directives.append(RemoveAttributeKeyword(globs[0], globs[1]))
    return AdaptationConfig(directives)


# ---------------------------------------------------------------------------
# Applying a config
# ---------------------------------------------------------------------------

@dataclass
class ReportEntry:
    directive: str
    matches: int
    unit: str

    @property
    def warning(self) -> bool:
        return self.matches == 0

    def render(self) -> str:
        if self.warning:
            return f"warning: {self.directive}: no matches"
        return f"{self.directive}: {self.matches} {self.unit}"


@dataclass
class AdaptationReport:
    entries: list[ReportEntry] = field(default_factory=list)

    def render(self) -> str:
        return "\n".join(e.render() for e in self.entries)


def adapt_grammar(g: Grammar, cfg: AdaptationConfig) -> tuple[Grammar, AdaptationReport]:
    """Apply directives in config order to a copy of ``g``.

    Returns the adapted grammar and a report with one entry per directive.
    A directive whose globs match nothing produces a report warning, never
    an error. Container braces are never removed: no directive touches the
    body braces of a rule.
    """
    g = copy.deepcopy(g)
    report = AdaptationReport()

    for d in cfg.directives:
        text = render_directive(d)
        if isinstance(d, DefineTerminal):
            rule = TerminalRule(d.kind, d.pattern)
            for i, t in enumerate(g.terminals):
                if t.kind == d.kind:
                    g.terminals[i] = rule
                    break
            else:
                g.terminals.append(rule)
            report.entries.append(ReportEntry(text, 1, "terminal defined"))

        elif isinstance(d, HoistShortName):
            pat = _compile_glob(d.class_glob)
            count = 0
            for rule in g.rules.values():
                if not pat.match(rule.class_name):
                    continue
                entry = rule.entry_for("shortName")
                if entry is None or not isinstance(entry.form, KeywordAttribute):
                    continue
                if entry.form.kind is not PrimitiveKind.IDENTIFIER:
                    continue
                rule.entries.remove(entry)
                rule.name_inline = True
                count += 1
            report.entries.append(ReportEntry(text, count, "rule(s) hoisted"))

        elif isinstance(d, UnfoldContainment):
            cpat = _compile_glob(d.class_glob)
            mpat = _compile_glob(d.member_glob)
            count = 0
            for rule in g.rules.values():
                if not cpat.match(rule.class_name):
                    continue
                for entry in rule.entries:
                    if not mpat.match(entry.member):
                        continue
                    if isinstance(entry.form, WrappedContainment):
                        entry.form = InlineContainment(entry.form.target)
                        count += 1
            report.entries.append(ReportEntry(text, count, "containment(s) unfolded"))

        elif isinstance(d, OptionalBody):
            pat = _compile_glob(d.class_glob)
            count = 0
            for rule in g.rules.values():
                if pat.match(rule.class_name) and not rule.body_optional:
                    rule.body_optional = True
                    count += 1
            report.entries.append(ReportEntry(text, count, "rule(s) made body-optional"))

        elif isinstance(d, RemoveAttributeKeyword):
            cpat = _compile_glob(d.class_glob)
            mpat = _compile_glob(d.member_glob)
            count = 0
            for rule in g.rules.values():
                if not cpat.match(rule.class_name):
                    continue
                for entry in rule.entries:
                    if not mpat.match(entry.member):
                        continue
                    form = entry.form
                    if isinstance(form, KeywordAttribute) and form.keyword is not None:
                        form.keyword = None
                        count += 1
                positional = [
                    e for e in rule.entries
                    if isinstance(e.form, KeywordAttribute) and e.form.keyword is None
                ]
                if len(positional) > 1:
                    names = ", ".join(e.member for e in positional)
                    raise ConfigError(
                        f"{text}: rule '{rule.class_name}' would have "
                        f"{len(positional)} positional attributes ({names}); "
                        "at most one is allowed"
                    )
            report.entries.append(ReportEntry(text, count, "keyword(s) removed"))

    return g, report


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def _type_name(kind: PrimitiveKind) -> str:
    return GRAMMAR_TYPE_NAMES[kind]


def _emit_entry(e: MemberEntry) -> str:
    form = e.form
    if isinstance(form, KeywordAttribute):
        op = "+=" if e.repeatable else "="
        base = f"{e.member}{op}{_type_name(form.kind)}"
        if form.keyword is not None:
            base = f"'{form.keyword}' {base}"
    elif isinstance(form, KeywordCrossRef):
        op = "+=" if e.repeatable else "="
        base = f"'{form.keyword}' {e.member}{op}[{form.target}]"
    elif isinstance(form, InlineContainment):
        op = "+=" if e.repeatable else "="
        base = f"{e.member}{op}{form.target}"
    else:
        op = "+=" if e.repeatable else "="
        inner = f"{e.member}{op}{form.target}"
        open_b, close_b = ("'{' ", " '}'") if form.braces else ("", "")
        if e.repeatable:
            sep = f'( "," {inner})*' if form.comma_separated else f"( {inner})*"
            core = f"'{form.keyword}' {open_b}{inner} {sep}{close_b}"
        else:
            core = f"'{form.keyword}' {open_b}{inner}{close_b}"
        if e.optional:
            return f"({core} )?"
        return core

    if e.repeatable:
        return f"({base})*" if e.optional else f"({base})+"
    if e.optional:
        return f"({base})?"
    return base


def _emit_rule(rule: ProductionRule) -> str:
    lines = [f"{rule.class_name} returns {rule.class_name}:"]
    head = f"    '{rule.keyword}'"
    if rule.name_inline:
        head += " shortName=Identifier"
    lines.append(head)
    lines.append("    ('{'" if rule.body_optional else "    '{'")
    for entry in rule.entries:
        lines.append("        " + _emit_entry(entry))
    lines.append("    '}')?;" if rule.body_optional else "    '}';")
    return "\n".join(lines)


def emit_grammar(g: Grammar) -> str:
    """Deterministic text rendering: root rule first, remaining rules in
    declaration order, then terminals. Undefined-but-used terminals get a
    placeholder comment."""
    blocks: list[str] = []
    order = [g.root_rule] if g.root_rule in g.rules else []
    order += [name for name in g.rules if name not in order]
    for name in order:
        blocks.append(_emit_rule(g.rules[name]))

    terminal_lines: list[str] = []
    for t in g.terminals:
        terminal_lines.append(f"terminal {_type_name(t.kind)}: /{t.pattern}/;")
    defined = g.defined_kinds()
    for kind in PrimitiveKind:
        if kind in g.used_kinds() and kind not in defined:
            terminal_lines.append(
                f"// terminal {_type_name(kind)} not defined here; "
                "the lexer uses the builtin default pattern"
            )
    if terminal_lines:
        blocks.append("\n".join(terminal_lines))

    if not blocks:
        return ""
    return "\n\n".join(blocks) + "\n"


# ---------------------------------------------------------------------------
# Plain-dict serialization (used by the CLI grammar cache)
# ---------------------------------------------------------------------------

def grammar_to_dict(g: Grammar) -> dict:
    def entry(e: MemberEntry) -> dict:
        form = e.form
        d: dict = {"member": e.member, "optional": e.optional, "repeatable": e.repeatable}
        if isinstance(form, KeywordAttribute):
            d["form"] = "attribute"
            d["keyword"] = form.keyword
            d["kind"] = form.kind.value
        elif isinstance(form, KeywordCrossRef):
            d["form"] = "crossref"
            d["keyword"] = form.keyword
            d["class"] = form.target
        elif isinstance(form, WrappedContainment):
            d["form"] = "wrapped"
            d["keyword"] = form.keyword
            d["class"] = form.target
            d["braces"] = form.braces
            d["commas"] = form.comma_separated
        else:
            d["form"] = "inline"
            d["class"] = form.target
        return d

    return {
        "root": g.root_rule,
        "terminals": [{"kind": t.kind.value, "pattern": t.pattern} for t in g.terminals],
        "rules": [
            {
                "class": r.class_name,
                "keyword": r.keyword,
                "nameInline": r.name_inline,
                "bodyOptional": r.body_optional,
                "entries": [entry(e) for e in r.entries],
            }
            for r in g.rules.values()
        ],
    }


def grammar_from_dict(data: dict) -> Grammar:
    def entry(d: dict) -> MemberEntry:
        form: EntryForm
        if d["form"] == "attribute":
            form = KeywordAttribute(d["keyword"], PrimitiveKind(d["kind"]))
        elif d["form"] == "crossref":
            form = KeywordCrossRef(d["keyword"], d["class"])
        elif d["form"] == "wrapped":
            form = WrappedContainment(d["keyword"], d["class"], d["braces"], d["commas"])
        elif d["form"] == "inline":
            form = InlineContainment(d["class"])
        else:
            raise GrammarError(f"bad grammar cache: unknown entry form '{d['form']}'")
        return MemberEntry(d["member"], form, d["optional"], d["repeatable"])

    rules = {
        r["class"]: ProductionRule(
            class_name=r["class"],
            keyword=r["keyword"],
            name_inline=r["nameInline"],
            body_optional=r["bodyOptional"],
            entries=[entry(e) for e in r["entries"]],
        )
        for r in data["rules"]
    }
    terminals = [
        TerminalRule(PrimitiveKind(t["kind"]), t["pattern"]) for t in data["terminals"]
    ]
    return Grammar(rules=rules, terminals=terminals, root_rule=data["root"])
