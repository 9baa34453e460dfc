"""Cursor context detection and proposal generation."""

from eatxt.assist import (
    KEYWORD,
    TEMPLATE,
    build_template,
    complete,
    locate_context,
    locate_context_at,
)
from eatxt.diagnostics import ERROR
from eatxt.model import build_cache
from eatxt.textsyntax import parse_model

from support import MODELS, fill_placeholders

WIPER = (MODELS[0].parent / "wiper_system.eatxt").read_text(encoding="utf-8")


def cache_for(text, g, mm):
    root, _ = parse_model(text, g, mm)
    return build_cache(root, mm) if root is not None else None


def proposals_at(text, line, col, g, mm):
    ctx = locate_context(text, line, col, g, mm)
    return complete(ctx, g, mm, cache_for(text, g, mm))


# --- context detection -----------------------------------------------------


def test_context_inside_an_element_body(g, mm):
    # Line 17 is the blank-ish area right after "isElementary true".
    ctx = locate_context(WIPER, 17, 13, g, mm)
    assert ctx.kind == "element"
    assert ctx.class_name == "DesignFunctionType"
    assert "isElementary" in ctx.members_present


def test_context_at_top_of_empty_document(g, mm):
    ctx = locate_context("", 1, 1, g, mm)
    assert ctx.kind == "top"
    assert not ctx.has_root


def test_context_after_a_complete_root(g, mm):
    text = "EAPackage P\n{\n}\n"
    ctx = locate_context(text, 3, 2, g, mm)
    assert ctx.kind == "top"
    assert ctx.has_root


def test_context_inside_string_literal_is_none(g, mm):
    text = 'EAPackage P\n{\n    name "hello"\n}\n'
    assert locate_context(text, 3, 13, g, mm) is None


def test_context_just_after_string_is_element(g, mm):
    text = 'EAPackage P\n{\n    name "hello"\n}\n'
    ctx = locate_context(text, 3, 18, g, mm)
    assert ctx is not None and ctx.kind == "element"


def test_context_in_unclosed_body(g, mm):
    text = "EAPackage P\n{\n    EADatatype T\n"
    ctx = locate_context_at(text, len(text), g, mm)
    assert ctx.kind == "element" and ctx.class_name == "EAPackage"


def test_nested_context_picks_innermost(g, mm):
    text = "EAPackage P\n{\n    DesignFunctionType F\n    {\n    }\n}\n"
    inner = locate_context(text, 5, 1, g, mm)
    assert inner.class_name == "DesignFunctionType"
    outer = locate_context(text, 6, 1, g, mm)
    assert outer.class_name == "EAPackage"


def test_context_tracks_element_ids(g, mm):
    text = "EAPackage P\n{\n    EAPackage Q\n    {\n    }\n}\n"
    outer = locate_context(text, 6, 1, g, mm)
    inner = locate_context(text, 5, 1, g, mm)
    assert outer.element_id == 1
    assert inner.element_id == 2


def test_wrapper_context_in_unadapted_grammar(gen_g, mm):
    text = "EAPackage\n{\n    shortName P\n    element\n    {\n    }\n}\n"
    ctx = locate_context(text, 6, 1, gen_g, mm)
    assert ctx.kind == "wrapper"
    assert ctx.member == "element"


# --- proposal lists ----------------------------------------------------------


def test_empty_document_proposes_exactly_the_root(g, mm):
    props = proposals_at("", 1, 1, g, mm)
    kinds = [(p.kind, p.label) for p in props]
    assert kinds == [(KEYWORD, "EAPackage"), (TEMPLATE, "EAPackage")]
    assert props[0].insert_text == "EAPackage"
    assert props[1].insert_text == "EAPackage ${1:name}"


def test_no_proposals_after_the_root_exists(g, mm):
    assert proposals_at("EAPackage P\n{\n}\n", 3, 2, g, mm) == []


def test_wiper_function_body_proposals(g, mm):
    props = proposals_at(WIPER, 17, 13, g, mm)
    keywords = [p.label for p in props if p.kind == KEYWORD]
    # isElementary is single-valued and already given on line 17's element,
    # so only the containment keywords remain.
    assert keywords == [
        "FunctionClientServerPort",
        "FunctionFlowPort",
        "FunctionPrototype",
        "FunctionConnector",
        "Comment",
    ]
    flow = next(
        p for p in props if p.kind == TEMPLATE and p.label == "FunctionFlowPort"
    )
    assert flow.insert_text == (
        "FunctionFlowPort ${1:name}\n"
        "{\n"
        "    direction ${2:Identifier}\n"
        "    type WiperSystem.Datatypes.Boolean\n"
        "}"
    )


def test_single_valued_attribute_reappears_when_absent(g, mm):
    text = "EAPackage P\n{\n    DesignFunctionType F\n    {\n    }\n}\n"
    props = proposals_at(text, 5, 1, g, mm)
    keywords = [p.label for p in props if p.kind == KEYWORD]
    assert keywords[0] == "isElementary"


def test_attribute_keyword_has_no_template(g, mm):
    props = proposals_at("EAPackage P\n{\n", 2, 2, g, mm)
    labels = {(p.kind, p.label) for p in props}
    assert (KEYWORD, "category") in labels
    assert (TEMPLATE, "category") not in labels


def test_repeatable_members_always_proposed(g, mm):
    text = "EAPackage P\n{\n    EADatatype T\n}\n"
    props = proposals_at(text, 4, 1, g, mm)
    assert "EADatatype" in [p.label for p in props if p.kind == KEYWORD]


def test_wrapper_context_proposes_concrete_subclasses(gen_g, mm):
    text = (
        "EAPackage\n{\n"
        "    shortName P\n"
        "    element\n    {\n"
        "        DesignFunctionType\n        {\n"
        "            shortName F\n"
        "            port\n            {\n            }\n"
        "        }\n"
        "    }\n"
        "}\n"
    )
    props = proposals_at(text, 11, 1, gen_g, mm)
    keywords = [p.label for p in props if p.kind == KEYWORD]
    assert keywords == [
        "FunctionClientServerPort",
        "FunctionFlowPort",
    ]


def test_abstract_targets_fan_out_alphabetically(g, mm):
    text = "EAPackage P\n{\n    DesignFunctionType F\n    {\n    }\n}\n"
    props = proposals_at(text, 5, 1, g, mm)
    keywords = [p.label for p in props if p.kind == KEYWORD]
    # "port" targets the abstract FunctionPort: its concrete subclasses
    # appear in alphabetical order at the port entry's position.
    i = keywords.index("FunctionClientServerPort")
    assert keywords[i + 1] == "FunctionFlowPort"


# --- templates ---------------------------------------------------------------


def test_template_for_class_without_mandatory_members(g, mm):
    assert build_template("EAPackage", g, mm, None) == "EAPackage ${1:name}"


def test_template_lists_mandatory_members_in_order(g, mm):
    got = build_template("FunctionFlowPort", g, mm, None)
    assert got == (
        "FunctionFlowPort ${1:name}\n"
        "{\n"
        "    direction ${2:Identifier}\n"
        "    type ${3:EADatatype}\n"
        "}"
    )


def test_template_prefills_reference_from_cache(g, mm):
    cache = cache_for(WIPER, g, mm)
    got = build_template("FunctionPrototype", g, mm, cache)
    assert "type WiperSystem.Functions.WiperCtrlBasic" in got
    assert "${2" not in got


def test_template_for_anonymous_class_has_no_name_slot(g, mm):
    assert build_template("Comment", g, mm, None) == "Comment"


def test_template_under_unadapted_grammar_spells_the_name_line(gen_g, mm):
    got = build_template("EAPackage", gen_g, mm, None)
    assert got == "EAPackage\n{\n    shortName ${1:name}\n}"


def test_templates_parse_after_placeholder_substitution(g, mm):
    cache = cache_for(WIPER, g, mm)
    for cls in ("EAPackage", "EADatatype", "Comment", "DesignFunctionType"):
        snippet = fill_placeholders(build_template(cls, g, mm, cache))
        if cls != "EAPackage":
            snippet = "EAPackage Host\n{\n" + snippet + "\n}\n"
        root, diags = parse_model(snippet, g, mm)
        assert root is not None
        assert not [d for d in diags if d.severity == ERROR], (cls, snippet)


# --- soundness and completeness over whole files -----------------------------


def contexts_of(text, g, mm):
    seen = {}
    for offset in range(len(text) + 1):
        ctx = locate_context_at(text, offset, g, mm)
        if ctx is not None and ctx not in seen:
            seen[ctx] = offset
    return seen


def insertion_point(text, ctx, offset):
    """A fresh line inside the context's body, right before it closes."""
    if ctx.kind == "top":
        return len(text)
    depth = 0
    i = offset
    while i < len(text):
        ch = text[i]
        if ch == '"':
            i += 1
            while i < len(text) and text[i] != '"':
                i += 2 if text[i] == "\\" else 1
        elif text.startswith("//", i):
            i = text.find("\n", i)
            if i < 0:
                break
        elif ch == "{":
            depth += 1
        elif ch == "}":
            if depth == 0:
                return i
            depth -= 1
        i += 1
    return len(text)


def test_proposals_are_sound_everywhere(g, mm):
    for path in MODELS:
        text = path.read_text(encoding="utf-8")
        cache = cache_for(text, g, mm)
        base = [d for d in parse_model(text, g, mm)[1] if d.severity == ERROR]
        assert base == []
        for ctx, offset in contexts_of(text, g, mm).items():
            if ctx.kind == "top" and ctx.has_root:
                continue
            at = insertion_point(text, ctx, offset)
            for p in complete(ctx, g, mm, cache):
                if p.kind != TEMPLATE:
                    continue
                snippet = fill_placeholders(p.insert_text)
                patched = text[:at] + "\n" + snippet + "\n" + text[at:]
                root, diags = parse_model(patched, g, mm)
                errors = [d for d in diags if d.severity == ERROR]
                assert root is not None and errors == [], (
                    path.name,
                    ctx.class_name,
                    p.label,
                    [d.message for d in errors],
                )


def test_keyword_proposals_are_complete(g, mm):
    # Whatever the brute-force probe can insert, the keyword list offers.
    text = (MODELS[0].parent / "mixed_order.eatxt").read_text(encoding="utf-8")
    cache = cache_for(text, g, mm)
    for ctx, offset in contexts_of(text, g, mm).items():
        if ctx.kind != "element":
            continue
        offered = {p.label for p in complete(ctx, g, mm, cache) if p.kind == KEYWORD}
        at = insertion_point(text, ctx, offset)
        for cls in mm.concrete_classes():
            snippet = fill_placeholders(build_template(cls, g, mm, cache))
            patched = text[:at] + "\n" + snippet + "\n" + text[at:]
            _, diags = parse_model(patched, g, mm)
            if not [d for d in diags if d.severity == ERROR]:
                assert cls in offered, (ctx.class_name, cls)


def test_proposals_match_cache_contents(g, mm):
    cache = cache_for(WIPER, g, mm)
    ctx = locate_context(WIPER, 17, 13, g, mm)
    props = complete(ctx, g, mm, cache)
    proto = next(
        p for p in props if p.kind == TEMPLATE and p.label == "FunctionPrototype"
    )
    first = cache.by_class["DesignFunctionType"][0][0].dotted
    assert f"type {first}" in proto.insert_text
