"""Re-annotation: the attribute-analyst prompt, response parsing, and label cleaning."""

from __future__ import annotations

import logging
import re
import string
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .batch import BatchLimits, run_ordered
from .endpoint import Endpoint
from .schema import (
    DEFAULT_ATTRIBUTE_SCHEMA,
    AttributeSchema,
    DropRecord,
    FaceImageRef,
    FailureRecord,
    PersonAnnotation,
    RawAnnotationResponse,
    normalize_name,
)

log = logging.getLogger(__name__)

PROMPT_PREAMBLE = (
    "Suppose you are a face fine-grained attribute analyst; based on a given image, you can "
    "output both the image caption in detail and the list of fine-grained attributes for each "
    "person."
)

REQUIREMENTS = (
    "The image caption should be generated according to the fine-grained attributes.",
    "Please extract them from the image, do not imagine yourself.",
    "If there are multiple people in the image, please separate each person, point out the "
    "position of each person, and list a list of fine-grained attributes for each person.",
    "The list of fine-grained attributes should be formatted as follows:\n"
    "* Attribute name: Attribute value\n"
    "For example:\n"
    "* Gender: Male\n"
    "* Age: Child\n"
    "* Hair color: Black",
    "The fine-grained attributes include but are not limited to the following:",
)

POSITION_WORDS = (
    "leftmost", "rightmost", "second from left", "second from right", "third from left",
    "third from right", "center", "top", "bottom",
)


def render_annotation_prompt(schema: AttributeSchema = DEFAULT_ATTRIBUTE_SCHEMA) -> str:
    lines = [PROMPT_PREAMBLE, "", "Requirements:"]
    for letter, req in zip("ABCDE", REQUIREMENTS):
        lines.append(f"{letter}. {req}")
    for i, spec in zip(schema.item_numbers(), schema.attributes):
        if spec.allowed_values:
            values = ", ".join(spec.allowed_values) + (", etc." if spec.open_ended else "")
            lines.append(f"{i}. {spec.name} ({values})")
        else:
            lines.append(f"{i}. {spec.name}")
    return "\n".join(lines) + "\n"


# ── response format ─────────────────────────────────────────────────────────


def _display_name(name: str) -> str:
    return name[:1].upper() + name[1:]


def format_annotation_response(persons: Sequence[PersonAnnotation], image_caption: str = "",
                               headers: bool | None = None) -> str:
    """Serialize persons the way the prompt asks the annotator to answer.

    This is the inverse of :func:`parse_annotation_response`; mocks and tests use it.
    A person whose caption equals ``image_caption`` gets no caption of its own.
    """
    if headers is None:
        headers = len(persons) > 1
    blocks = []
    if image_caption:
        blocks.append(image_caption)
    for k, p in enumerate(persons):
        lines = []
        if headers:
            lines.append(f"Person {k + 1}:")
        if p.position:
            lines.append(f"* Position: {p.position}")
        for name, value in p.attributes.items():
            lines.append(f"* {_display_name(name)}: {value}")
        if p.caption and p.caption != image_caption:
            lines.append(p.caption)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


class ParseFailure(ValueError):
    def __init__(self, text: str, message: str = "no '* Name: Value' lines found"):
        super().__init__(message)
        self.text = text


@dataclass
class ParsedResponse:
    persons: list[PersonAnnotation]
    residual_caption: str
    unknown_attributes: list[tuple[int, str, str]] = field(default_factory=list)


_BULLET = re.compile(r"^\s*(?:[*\-•]|\d{1,2}[.)])\s+(.*)$")
_HEADER = re.compile(
    r"^(?:person|face|individual|subject)\s*#?\s*(\d+)?\s*"
    r"(?:\(([^)]*)\)|[-–—,]\s*([^:]*))?\s*:?$",
    re.IGNORECASE,
)
_LABEL_ONLY = re.compile(r"^[A-Za-z][\w\s\-/()]{0,48}:$")
_CAPTION_LABEL = re.compile(r"^(?:image\s+)?(?:caption|description)\s*:\s*", re.IGNORECASE)
_POSITION_IN_HEADER = re.compile(
    r"\b(" + "|".join(sorted((re.escape(w) for w in POSITION_WORDS), key=len, reverse=True))
    + r"|left|right|middle)\b",
    re.IGNORECASE,
)


class _Block:
    def __init__(self, from_header: bool, position: str = ""):
        self.from_header = from_header
        self.position = position
        self.attributes: dict[str, str] = {}
        self.caption: list[str] = []
        self.touched = False  # any bullet seen


def parse_annotation_response(text: str, image: FaceImageRef | None = None,
                              schema: AttributeSchema = DEFAULT_ATTRIBUTE_SCHEMA) -> ParsedResponse:
    """Split a multi-person annotation into persons and their attribute maps.

    Attribute names are matched case-insensitively against ``schema`` and stored
    under the schema's spelling; values are trimmed but otherwise verbatim.
    Prose lines belong to the person block they follow; prose before the first
    block is the shared image caption, used for persons without their own.
    """
    image = image or FaceImageRef("unknown", "")
    preamble: list[str] = []
    blocks: list[_Block] = []
    unknown: list[tuple[int, str, str]] = []
    n_bullets = 0
    cur: _Block | None = None

    for raw_line in (text or "").splitlines():
        line = raw_line.strip()
        if not line:
            continue
        bullet = _BULLET.match(line)
        if bullet:
            body = bullet.group(1).replace("**", "").strip()
            name, sep, value = body.partition(":")
            name, value = name.strip(), value.strip()
            if sep and name and len(name) <= 40 and value:
                n_bullets += 1
                if normalize_name(name) == "position":
                    if cur is None or cur.touched or (cur.position and not cur.from_header):
                        cur = _Block(False)
                        blocks.append(cur)
                    cur.position = value
                    cur.touched = True
                    continue
                spec = schema.lookup(name)
                key = spec.name if spec else name
                if cur is None or key in cur.attributes:
                    cur = _Block(False)
                    blocks.append(cur)
                cur.touched = True
                if spec is None:
                    unknown.append((len(blocks) - 1, name, value))
                    continue
                cur.attributes[key] = value
                continue
        plain = line.replace("**", "").strip().strip("#").strip()
        header = _HEADER.match(plain)
        if header:
            hint = header.group(2) or header.group(3) or ""
            m = _POSITION_IN_HEADER.search(hint)
            cur = _Block(True, m.group(1).lower() if m else "")
            blocks.append(cur)
            continue
        if _LABEL_ONLY.match(plain):
            continue
        plain = _CAPTION_LABEL.sub("", plain)
        if not plain:
            continue
        (cur.caption if cur is not None else preamble).append(plain)

    if n_bullets == 0:
        raise ParseFailure(text or "")
    shared = "\n".join(preamble)
    persons = []
    for k, b in enumerate(blocks):
        caption = "\n".join(b.caption) or shared
        persons.append(PersonAnnotation(image, k, b.position, caption, dict(b.attributes)))
    return ParsedResponse(persons, shared, unknown)


# ── label cleaning ──────────────────────────────────────────────────────────

INDETERMINATE_VALUES = ("cannot determine", "unknown", "n/a", "not visible", "unclear")
FACE_KEYWORDS = ("face", "eyes", "hair", "skin", "expression")


@dataclass(frozen=True)
class CleaningConfig:
    indeterminate_values: tuple[str, ...] = INDETERMINATE_VALUES
    face_keywords: tuple[str, ...] = FACE_KEYWORDS
    min_attributes: int = 3
    schema: AttributeSchema = DEFAULT_ATTRIBUTE_SCHEMA


@dataclass
class CleaningOutcome:
    kept: list[PersonAnnotation]
    dropped: list[tuple[int, str]]
    attribute_drops: list[tuple[int, str, str, str]] = field(default_factory=list)

    def drop_records(self, image_id: str) -> list[DropRecord]:
        out = [DropRecord(image_id, idx, reason, attr, value)
               for idx, attr, value, reason in self.attribute_drops]
        out += [DropRecord(image_id, idx, reason) for idx, reason in self.dropped]
        return out


_PUNCT = str.maketrans("", "", string.punctuation.replace("/", "").replace("-", ""))


def normalize_value(value: str) -> str:
    """Lowercase, drop punctuation except '/' and '-', collapse whitespace."""
    return " ".join(value.translate(_PUNCT).casefold().split())


def _indeterminate_set(cfg: CleaningConfig) -> set[str]:
    return {normalize_value(v) for v in cfg.indeterminate_values}


@lru_cache(maxsize=32)
def _keyword_pattern(cfg: CleaningConfig) -> re.Pattern:
    words = {w.casefold() for w in cfg.face_keywords}
    words |= {normalize_name(n) for n in cfg.schema.names}
    alt = "|".join(sorted((re.escape(w) for w in words), key=len, reverse=True))
    return re.compile(rf"\b(?:{alt})\b", re.IGNORECASE)


def has_face_description(caption: str, cfg: CleaningConfig = CleaningConfig()) -> bool:
    return bool(_keyword_pattern(cfg).search(caption or ""))


def clean_labels(persons: Iterable[PersonAnnotation],
                 cfg: CleaningConfig = CleaningConfig()) -> CleaningOutcome:
    """Drop indeterminate and off-vocabulary attribute values, then drop weak persons.

    A person is dropped when its caption is itself indeterminate
    (indeterminate_value), when fewer than ``min_attributes`` attributes survive
    (empty_attributes, or unknown_attribute_value when only off-vocabulary
    values were removed), or when the caption carries no facial keyword
    (missing_face_description).
    """
    indeterminate = _indeterminate_set(cfg)
    keywords = _keyword_pattern(cfg)
    kept: list[PersonAnnotation] = []
    dropped: list[tuple[int, str]] = []
    attr_drops: list[tuple[int, str, str, str]] = []

    for p in persons:
        surviving: dict[str, str] = {}
        removed_reasons = set()
        for name, value in p.attributes.items():
            spec = cfg.schema.lookup(name)
            norm = normalize_value(value)
            if norm in indeterminate or not norm:
                attr_drops.append((p.person_index, name, value, "indeterminate_value"))
                removed_reasons.add("indeterminate_value")
                continue
            if spec is None:
                attr_drops.append((p.person_index, name, value, "unknown_attribute_value"))
                removed_reasons.add("unknown_attribute_value")
                continue
            if spec.allowed_values:
                canon = {normalize_value(v): v for v in spec.allowed_values}
                if norm in canon:
                    value = canon[norm]
                elif spec.enumerated:
                    attr_drops.append((p.person_index, name, value, "unknown_attribute_value"))
                    removed_reasons.add("unknown_attribute_value")
                    continue
            surviving[spec.name] = value

        if normalize_value(p.caption) in indeterminate:
            dropped.append((p.person_index, "indeterminate_value"))
        elif len(surviving) < cfg.min_attributes:
            reason = ("unknown_attribute_value" if removed_reasons == {"unknown_attribute_value"}
                      else "empty_attributes")
            dropped.append((p.person_index, reason))
        elif not keywords.search(p.caption or ""):
            dropped.append((p.person_index, "missing_face_description"))
        else:
            kept.append(PersonAnnotation(p.image, p.person_index, p.position, p.caption.strip(),
                                         surviving, p.extra))
    return CleaningOutcome(kept, dropped, attr_drops)


# ── batch re-annotation ─────────────────────────────────────────────────────


@dataclass
class AnnotationOutcome:
    image: FaceImageRef
    kept: list[PersonAnnotation]
    failure: FailureRecord | None
    raw: RawAnnotationResponse | None
    drops: list[DropRecord]
    attempts: int


def process_response(image: FaceImageRef, text: str,
                     cfg: CleaningConfig = CleaningConfig()) -> tuple[list[PersonAnnotation],
                                                                      FailureRecord | None,
                                                                      list[DropRecord]]:
    """Parse and clean one annotation response."""
    try:
        parsed = parse_annotation_response(text, image, cfg.schema)
    except ParseFailure:
        return [], FailureRecord(image.id, "parse", "no attribute lines"), []
    outcome = clean_labels(parsed.persons, cfg)
    drops = outcome.drop_records(image.id)
    if not outcome.kept:
        return [], FailureRecord(image.id, "cleaned_empty",
                                 ";".join(sorted({r for _, r in outcome.dropped}))), drops
    return outcome.kept, None, drops


def annotate_batch(images: Iterable[FaceImageRef], client: Endpoint,
                   limits: BatchLimits = BatchLimits(), cfg: CleaningConfig = CleaningConfig(),
                   sleep=None) -> Iterator[AnnotationOutcome]:
    """Annotate images through ``client``; one outcome per image, in input order."""
    prompt = render_annotation_prompt(cfg.schema)

    def call(image: FaceImageRef):
        return client.complete(image, prompt)

    kwargs = {"sleep": sleep} if sleep is not None else {}
    for oc in run_ordered(images, call, limits, **kwargs):
        image = oc.item
        if not oc.ok:
            reason = "transport" if oc.error.retryable else "fatal"
            yield AnnotationOutcome(image, [], FailureRecord(image.id, reason, str(oc.error),
                                                             oc.attempts), None, [], oc.attempts)
            continue
        raw = RawAnnotationResponse(image, oc.response.text, oc.latency_ms, client.endpoint_id,
                                    oc.attempts)
        kept, failure, drops = process_response(image, oc.response.text, cfg)
        if failure is not None:
            failure = FailureRecord(failure.item_id, failure.reason, failure.detail, oc.attempts)
        yield AnnotationOutcome(image, kept, failure, raw, drops, oc.attempts)
