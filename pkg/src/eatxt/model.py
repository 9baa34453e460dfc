"""In-memory instance models, qualified names and cross-reference lookup.

Elements form a containment tree. Order matters everywhere: attributes and
cross references keep the order they were written in, and the children
list is the document order that every transformation must preserve.

Cross references are stored as unresolved qualified names (dot-joined
shortName paths from the root). :func:`resolve` binds them to element ids;
:func:`build_cache` precomputes the class-indexed name table that content
assist uses so that a completion query never has to walk the model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .diagnostics import Diagnostic, ERROR, ModelError, Span
from .metamodel import Metamodel


@dataclass(frozen=True)
class QualifiedName:
    """Nonempty path of shortNames, rendered with dots."""

    segments: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("qualified name needs at least one segment")

    @classmethod
    def parse(cls, dotted: str) -> "QualifiedName":
        return cls(tuple(dotted.split(".")))

    @property
    def dotted(self) -> str:
        return ".".join(self.segments)

    def __str__(self) -> str:
        return self.dotted


@dataclass
class CrossRef:
    member: str
    target: QualifiedName
    resolved_id: int | None = None
    span: Span | None = None


@dataclass
class ModelElement:
    class_name: str
    short_name: str | None = None
    attributes: list[tuple[str, str]] = field(default_factory=list)
    cross_refs: list[CrossRef] = field(default_factory=list)
    children: list[tuple[str, "ModelElement"]] = field(default_factory=list)
    id: int = 0
    span: Span | None = None

    def iter_preorder(self) -> Iterator["ModelElement"]:
        yield self
        for _, child in self.children:
            yield from child.iter_preorder()

    def find(self, element_id: int) -> "ModelElement | None":
        for el in self.iter_preorder():
            if el.id == element_id:
                return el
        return None

    def attribute_values(self, member: str) -> list[str]:
        return [v for (m, v) in self.attributes if m == member]

    def size(self) -> int:
        return sum(1 for _ in self.iter_preorder())


def assign_preorder_ids(root: ModelElement, start: int = 1) -> int:
    """Number the tree in document pre-order. Returns the next free id."""
    next_id = start
    for el in root.iter_preorder():
        el.id = next_id
        next_id += 1
    return next_id


# ---------------------------------------------------------------------------
# Qualified names
# ---------------------------------------------------------------------------

def _path_to(root: ModelElement, element_id: int) -> list[ModelElement] | None:
    if root.id == element_id:
        return [root]
    for _, child in root.children:
        path = _path_to(child, element_id)
        if path is not None:
            return [root] + path
    return None


def fqn_of(root: ModelElement, element_id: int) -> QualifiedName:
    """Dot path of shortNames from the root down to the element, inclusive.

    Raises ModelError if the element is unknown or any element on the path
    has no shortName; the message names the nearest named ancestor.
    """
    path = _path_to(root, element_id)
    if path is None:
        raise ModelError(f"no element with id {element_id}")
    segments: list[str] = []
    for el in path:
        if not el.short_name:
            where = f"below '{'.'.join(segments)}'" if segments else "at the root"
            raise ModelError(
                f"element {el.id} ({el.class_name}) {where} has no shortName, "
                "so no qualified name reaches it"
            )
        segments.append(el.short_name)
    return QualifiedName(tuple(segments))


def _named_elements(root: ModelElement) -> Iterator[tuple[QualifiedName, ModelElement]]:
    """Pre-order walk yielding (fqn, element) for addressable elements.
    Subtrees below an unnamed element are skipped: nothing inside them can
    be reached by a qualified name."""

    def walk(el: ModelElement, prefix: tuple[str, ...]) -> Iterator[tuple[QualifiedName, ModelElement]]:
        if not el.short_name:
            return
        segments = prefix + (el.short_name,)
        yield QualifiedName(segments), el
        for _, child in el.children:
            yield from walk(child, segments)

    yield from walk(root, ())


# ---------------------------------------------------------------------------
# Resolution
# ---------------------------------------------------------------------------

def resolve(root: ModelElement, mm: Metamodel) -> list[Diagnostic]:
    """Bind every cross reference to the element its qualified name denotes.

    A reference resolves when exactly one type-compatible element carries
    the name. Everything else produces an error diagnostic and leaves the
    reference unresolved. Running resolve again changes nothing.
    """
    diagnostics: list[Diagnostic] = []

    census: dict[QualifiedName, list[ModelElement]] = {}
    for fqn, el in _named_elements(root):
        census.setdefault(fqn, []).append(el)

    for fqn, elements in census.items():
        if len(elements) > 1:
            ids = ", ".join(f"id {e.id}" for e in elements)
            diagnostics.append(Diagnostic(
                ERROR,
                f"duplicate qualified name '{fqn}' ({ids})",
                elements[1].span or Span(0, 0, 0, 0),
            ))

    for el in root.iter_preorder():
        for ref in el.cross_refs:
            member = mm.member_of(el.class_name, ref.member)
            target_class = getattr(member.kind, "target", None) if member else None
            span = ref.span or el.span or Span(0, 0, 0, 0)
            candidates = census.get(ref.target, [])
            if not candidates:
                diagnostics.append(Diagnostic(
                    ERROR,
                    f"unresolved reference '{ref.target}' "
                    f"({el.class_name}.{ref.member})",
                    span,
                ))
                continue
            if target_class is not None:
                fitting = [
                    c for c in candidates if mm.is_subtype(c.class_name, target_class)
                ]
            else:
                fitting = candidates
            if not fitting:
                found = candidates[0].class_name
                diagnostics.append(Diagnostic(
                    ERROR,
                    f"reference '{ref.target}' ({el.class_name}.{ref.member}) "
                    f"expects a {target_class}, found {found}",
                    span,
                ))
            elif len(fitting) > 1:
                ids = ", ".join(f"id {c.id}" for c in fitting)
                diagnostics.append(Diagnostic(
                    ERROR,
                    f"ambiguous reference '{ref.target}' "
                    f"({el.class_name}.{ref.member}): {ids}",
                    span,
                ))
            else:
                ref.resolved_id = fitting[0].id
    return diagnostics


# ---------------------------------------------------------------------------
# Reference cache
# ---------------------------------------------------------------------------

@dataclass
class ReferenceCache:
    """Per-class table of addressable elements, in document pre-order.

    Every element is listed under its own class and all its supertypes, so
    a lookup for an abstract class finds concrete instances directly.
    """

    by_class: dict[str, list[tuple[QualifiedName, int]]] = field(default_factory=dict)


def build_cache(root: ModelElement, mm: Metamodel) -> ReferenceCache:
    """One pre-order pass over the model. Unnamed elements are absent."""
    cache = ReferenceCache()
    supers: dict[str, list[str]] = {}
    for fqn, el in _named_elements(root):
        fan_out = supers.get(el.class_name)
        if fan_out is None:
            fan_out = [c for c in mm.classes if mm.is_subtype(el.class_name, c)]
            supers[el.class_name] = fan_out
        for cls in fan_out:
            cache.by_class.setdefault(cls, []).append((fqn, el.id))
    return cache


def lookup_first_fitting(cache: ReferenceCache, class_name: str) -> QualifiedName | None:
    """First element (document order) assignable to the class, if any."""
    entries = cache.by_class.get(class_name)
    if not entries:
        return None
    return entries[0][0]


# ---------------------------------------------------------------------------
# Structural comparison (spans, ids and resolution state ignored)
# ---------------------------------------------------------------------------

def same_structure(a: ModelElement, b: ModelElement) -> bool:
    """Compare trees by content.

    Attribute and cross-reference values are grouped per member (their
    relative order within one member matters, the interleaving across
    members does not, since the formatter canonicalizes it). Children are
    compared pairwise in document order.
    """
    if a.class_name != b.class_name or a.short_name != b.short_name:
        return False

    def grouped(pairs: list[tuple[str, str]]) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for member, value in pairs:
            out.setdefault(member, []).append(value)
        return out

    if grouped(a.attributes) != grouped(b.attributes):
        return False
    refs_a = grouped([(r.member, r.target.dotted) for r in a.cross_refs])
    refs_b = grouped([(r.member, r.target.dotted) for r in b.cross_refs])
    if refs_a != refs_b:
        return False
    if len(a.children) != len(b.children):
        return False
    for (ma, ca), (mb, cb) in zip(a.children, b.children):
        if ma != mb or not same_structure(ca, cb):
            return False
    return True
