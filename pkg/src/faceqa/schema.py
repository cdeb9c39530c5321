"""Shared record types, the built-in face attribute schema, and JSONL record I/O.

Every pipeline stage reads and writes line-delimited JSON. Each record kind is
a frozen dataclass with ``to_dict`` / ``from_dict`` and a ``validate`` method
that raises :class:`SchemaError` naming the offending field.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from pathlib import Path
from typing import IO, Any, Iterable, Iterator, Sequence

SOURCE_DATASETS = (
    "laion_face",
    "agedb",
    "rafdb",
    "emotionet",
    "lfwa",
    "utkface",
    "affectnet",
    "biwi",
    "celeba",
    "zero_shot",
    "other",
)

TASK_KINDS = ("age", "yes_no", "multiple_choice", "description")

GOLD_VARIANTS = ("number", "boolean", "letter", "text")

LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


class SchemaError(ValueError):
    """A record violates one of its invariants."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class RecordError(ValueError):
    """A record file problem, located by line number (reading) or index (writing)."""

    def __init__(self, message: str, *, line: int | None = None, index: int | None = None,
                 field_name: str | None = None):
        self.line = line
        self.index = index
        self.field = field_name
        where = f"line {line}" if line is not None else f"record {index}"
        super().__init__(f"{where}: {message}")


# ── attribute schema ────────────────────────────────────────────────────────


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    allowed_values: tuple[str, ...] = ()
    description: str = ""
    open_ended: bool = False  # candidate list ends in "etc."; other values are legal
    number: int | None = None  # prompt item number; None means its position in the schema

    @property
    def enumerated(self) -> bool:
        return bool(self.allowed_values) and not self.open_ended


@dataclass(frozen=True)
class AttributeSchema:
    attributes: tuple[AttributeSpec, ...]
    version: str = "custom"

    def __post_init__(self):
        seen = set()
        for spec in self.attributes:
            key = spec.name.casefold()
            if key in seen:
                raise SchemaError("attributes", f"duplicate attribute name {spec.name!r}")
            seen.add(key)

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    @cached_property
    def _by_key(self) -> dict[str, AttributeSpec]:
        return {normalize_name(spec.name): spec for spec in self.attributes}

    def lookup(self, name: str) -> AttributeSpec | None:
        """Case- and whitespace-insensitive lookup of an attribute by name."""
        return self._by_key.get(normalize_name(name))

    def item_numbers(self) -> list[int]:
        return [i if a.number is None else a.number for i, a in enumerate(self.attributes)]

    def without(self, name: str) -> "AttributeSchema":
        """Drop one attribute; the others keep their prompt item numbers."""
        kept = tuple(replace(a, number=n) for a, n in zip(self.attributes, self.item_numbers())
                     if a.name != name)
        return AttributeSchema(kept, self.version)

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "attributes": [
                {
                    "name": a.name,
                    "allowed_values": list(a.allowed_values),
                    "description": a.description,
                    "open_ended": a.open_ended,
                    **({} if a.number is None else {"number": a.number}),
                }
                for a in self.attributes
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AttributeSchema":
        attrs = tuple(
            AttributeSpec(
                name=a["name"],
                allowed_values=tuple(a.get("allowed_values", ())),
                description=a.get("description", ""),
                open_ended=bool(a.get("open_ended", False)),
                number=a.get("number"),
            )
            for a in d["attributes"]
        )
        return cls(attrs, d.get("version", "custom"))

    @classmethod
    def load(cls, path: str | Path) -> "AttributeSchema":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


_NAME_SPACE = re.compile(r"[\s_]+")


def normalize_name(name: str) -> str:
    return _NAME_SPACE.sub(" ", name.strip()).casefold()


def _a(name, values=(), description="", open_ended=False):
    return AttributeSpec(name, tuple(values), description, open_ended)


# Transcribed from the re-annotation prompt: item 0 (position) through item 37 (Jewelry).
DEFAULT_ATTRIBUTE_SCHEMA = AttributeSchema(
    (
        _a("position", (), "where the person is located in the image"),
        _a("age", ("infant", "toddler", "child", "teenager", "young adult", "middle-aged", "elderly"),
           "apparent age group"),
        _a("gender", ("male", "female"), "apparent gender"),
        _a("race", ("East Asian", "Southeast Asian", "South Asian", "Central Asian", "West Asian",
                    "African", "European", "Native American"), "apparent ethnicity"),
        _a("Hair color", ("black", "brown", "blonde", "red", "gray", "white"), "color of the hair",
           open_ended=True),
        _a("Hair length", ("long", "medium", "short", "bald"), "length of the hair"),
        _a("Hair type", ("straight", "curly", "wavy"), "texture of the hair"),
        _a("Bangs", ("with bangs", "without bangs"), "hair covering the forehead"),
        _a("Hairline", ("high", "low"), "height of the hairline"),
        _a("Eye size", ("big eyes", "small eyes"), "size of the eyes"),
        _a("Eye Shape", ("Round", "Almond", "Phoenix"), "outline of the eyes"),
        _a("Double eyelids", ("double eyelids", "single eyelids"), "eyelid crease"),
        _a("Distance between eyes", ("wide", "narrow"), "spacing of the eyes"),
        _a("Eye corners", ("upward", "downward"), "tilt of the outer eye corners"),
        _a("Bags under eyes", ("with bags", "without bags"), "puffiness under the eyes"),
        _a("Dark Circles", ("with dark circles", "without dark circles"), "darkening under the eyes"),
        _a("Eye color", ("black", "brown", "blue", "green"), "iris color", open_ended=True),
        _a("Nose size", ("big nose", "small nose"), "size of the nose"),
        _a("Nose height", ("high bridge", "low bridge"), "height of the nasal bridge"),
        _a("Nose width", ("wide nose", "narrow nose"), "width of the nose"),
        _a("Nose tip shape", ("rounded tip", "pointed tip"), "shape of the nose tip"),
        _a("Lip thickness", ("thick lips", "narrow lips"), "fullness of the lips"),
        _a("Lip color", ("red lips", "pink lips"), "color of the lips"),
        _a("Mouth corners", ("upturned", "downturned"), "direction of the mouth corners"),
        _a("Face shape", ("round face", "square face", "goose egg face", "melon face", "long face",
                          "diamond face"), "overall face outline"),
        _a("Chin shape", ("pointed chin", "round chin", "square chin"), "shape of the chin"),
        _a("Cheekbones", ("high cheekbones", "low cheekbones"), "prominence of the cheekbones"),
        _a("Skin color", ("fair", "yellowish", "wheatish", "tanned"), "skin tone"),
        _a("Skin texture", ("smooth", "rough"), "surface of the skin"),
        _a("Freckles", ("freckled", "freckle-free"), "presence of freckles"),
        _a("Moles", ("with", "without"), "presence of moles"),
        _a("Beard", ("bearded", "unshaven"), "facial hair"),
        _a("Eyeglasses", ("glasses", "no glasses"), "whether glasses are worn"),
        _a("Hat", ("Hat", "no hat"), "whether a hat is worn"),
        _a("Expression", ("happy", "sad", "angry", "surprised", "disgusted", "fearful"),
           "facial expression"),
        _a("Makeup", ("make-up", "face"), "whether make-up is worn"),
        _a("Jewelry", ("earrings", "necklace"), "visible jewelry", open_ended=True),
    ),
    version="fig4-v1",
)


# ── records ─────────────────────────────────────────────────────────────────


class Record:
    """Mixin giving dataclass records dict conversion with strict/lenient unknown-field handling.

    Unknown keys found in lenient mode are kept in ``extra`` and written back out
    after the declared fields.
    """

    kind: str = ""

    def validate(self) -> None:  # pragma: no cover - overridden
        pass

    def unique_key(self):
        """Key that must not repeat within one record file (None: no constraint)."""
        return None

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name == "extra":
                continue
            out[f.name] = _encode(getattr(self, f.name))
        out.update(getattr(self, "extra", {}) or {})
        return out

    @classmethod
    def _split(cls, d: dict, strict: bool) -> tuple[dict, dict]:
        if not isinstance(d, dict):
            raise SchemaError(cls.kind or cls.__name__, "expected an object")
        names = {f.name for f in fields(cls)} - {"extra"}
        known = {k: v for k, v in d.items() if k in names}
        unknown = {k: v for k, v in d.items() if k not in names}
        if unknown and strict:
            raise SchemaError(sorted(unknown)[0], "unknown field")
        return known, unknown

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True):
        raise NotImplementedError


def _encode(value):
    if isinstance(value, Record):
        return value.to_dict()
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted(_encode(v) for v in value)
    if isinstance(value, dict):
        return {k: _encode(v) for k, v in value.items()}
    return value


def _require(d: dict, key: str):
    if key not in d:
        raise SchemaError(key, "missing field")
    return d[key]


@dataclass(frozen=True)
class FaceImageRef(Record):
    id: str
    uri: str
    source_dataset: str = "other"
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    kind = "image"

    def unique_key(self):
        return self.id

    def validate(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise SchemaError("id", "must be a non-empty string")
        if not isinstance(self.uri, str):
            raise SchemaError("uri", "must be a string")
        if self.source_dataset not in SOURCE_DATASETS:
            raise SchemaError("source_dataset", f"{self.source_dataset!r} not in {SOURCE_DATASETS}")

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True) -> "FaceImageRef":
        known, unknown = cls._split(d, strict)
        return cls(_require(known, "id"), _require(known, "uri"),
                   known.get("source_dataset", "other"), unknown)


@dataclass(frozen=True)
class PersonAnnotation(Record):
    image: FaceImageRef
    person_index: int
    position: str
    caption: str
    attributes: dict[str, str]
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    kind = "person"

    def unique_key(self):
        return (self.image.id, self.person_index)

    def validate(self, schema: AttributeSchema = DEFAULT_ATTRIBUTE_SCHEMA) -> None:
        self.image.validate()
        if not isinstance(self.person_index, int) or isinstance(self.person_index, bool) \
                or self.person_index < 0:
            raise SchemaError("person_index", "must be a non-negative integer")
        if not isinstance(self.position, str):
            raise SchemaError("position", "must be a string")
        if not isinstance(self.caption, str) or not self.caption.strip():
            raise SchemaError("caption", "must be non-empty")
        if not isinstance(self.attributes, dict):
            raise SchemaError("attributes", "must be a mapping")
        for name, value in self.attributes.items():
            if schema.lookup(name) is None:
                raise SchemaError("attributes", f"{name!r} is not in the attribute schema")
            if not isinstance(value, str):
                raise SchemaError("attributes", f"value of {name!r} must be a string")

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True) -> "PersonAnnotation":
        known, unknown = cls._split(d, strict)
        return cls(
            image=FaceImageRef.from_dict(_require(known, "image"), strict),
            person_index=_require(known, "person_index"),
            position=known.get("position", ""),
            caption=_require(known, "caption"),
            attributes=dict(_require(known, "attributes")),
            extra=unknown,
        )


@dataclass(frozen=True)
class GoldLabel(Record):
    variant: str
    value: Any
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    kind = "gold"

    @classmethod
    def number(cls, n: int) -> "GoldLabel":
        return cls("number", n)

    @classmethod
    def boolean(cls, b: bool) -> "GoldLabel":
        return cls("boolean", bool(b))

    @classmethod
    def letter(cls, c: str) -> "GoldLabel":
        return cls("letter", c)

    @classmethod
    def text(cls, s: str) -> "GoldLabel":
        return cls("text", s)

    def validate(self) -> None:
        if self.variant not in GOLD_VARIANTS:
            raise SchemaError("gold", f"unknown variant {self.variant!r}")
        ok = {
            "number": isinstance(self.value, int) and not isinstance(self.value, bool),
            "boolean": isinstance(self.value, bool),
            "letter": isinstance(self.value, str) and len(self.value) == 1 and self.value in LETTERS,
            "text": isinstance(self.value, str),
        }[self.variant]
        if not ok:
            raise SchemaError("gold", f"value {self.value!r} does not fit variant {self.variant}")

    def answer_text(self) -> str:
        """The gold answer as a model would be expected to write it."""
        if self.variant == "boolean":
            return "Yes" if self.value else "No"
        return str(self.value)

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True) -> "GoldLabel":
        known, unknown = cls._split(d, strict)
        return cls(_require(known, "variant"), _require(known, "value"), unknown)


_EXPECTED_GOLD = {"age": "number", "yes_no": "boolean", "multiple_choice": "letter",
                  "description": "text"}


@dataclass(frozen=True)
class QAPair(Record):
    id: str
    image: FaceImageRef
    task: str
    question: str
    gold: GoldLabel
    options: tuple[tuple[str, str], ...] | None = None
    aux_description: str | None = None
    category: str = ""  # benchmark column the pair is scored under, e.g. "expression"
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    kind = "qa"

    def unique_key(self):
        return self.id

    def validate(self) -> None:
        if not self.id:
            raise SchemaError("id", "must be non-empty")
        self.image.validate()
        if self.task not in TASK_KINDS:
            raise SchemaError("task", f"{self.task!r} not in {TASK_KINDS}")
        if not isinstance(self.question, str) or not self.question.strip():
            raise SchemaError("question", "must be non-empty")
        if self.task == "multiple_choice":
            if not self.options:
                raise SchemaError("options", "required for multiple_choice")
            letters = [opt[0] for opt in self.options]
            if letters != list(LETTERS[: len(letters)]):
                raise SchemaError("options", f"letters {letters} are not consecutive from 'A'")
            texts = [opt[1] for opt in self.options]
            if len(set(texts)) != len(texts):
                raise SchemaError("options", "duplicate option texts")
        elif self.options is not None:
            raise SchemaError("options", f"must be absent when task is {self.task}")
        self.gold.validate()
        expected = _EXPECTED_GOLD[self.task]
        if self.gold.variant != expected:
            raise SchemaError("gold", f"task {self.task} needs a {expected} gold, got {self.gold.variant}")
        if self.task == "age" and not 1 <= self.gold.value <= 100:
            raise SchemaError("gold", f"age {self.gold.value} outside [1, 100]")
        if self.task == "multiple_choice" and self.gold.value not in {o[0] for o in self.options}:
            raise SchemaError("gold", f"letter {self.gold.value} is not among the options")

    def option_text(self, letter: str) -> str | None:
        for lt, text in self.options or ():
            if lt == letter:
                return text
        return None

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True) -> "QAPair":
        known, unknown = cls._split(d, strict)
        options = known.get("options")
        if options is not None:
            if not isinstance(options, list) or not all(
                    isinstance(o, (list, tuple)) and len(o) == 2 for o in options):
                raise SchemaError("options", "must be a list of [letter, text] pairs")
            options = tuple((o[0], o[1]) for o in options)
        return cls(
            id=_require(known, "id"),
            image=FaceImageRef.from_dict(_require(known, "image"), strict),
            task=_require(known, "task"),
            question=_require(known, "question"),
            gold=GoldLabel.from_dict(_require(known, "gold"), strict),
            options=options,
            aux_description=known.get("aux_description"),
            category=known.get("category", ""),
            extra=unknown,
        )


@dataclass(frozen=True)
class CaptionRecord(Record):
    id: str
    image: FaceImageRef
    instruction: str
    caption: str
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    kind = "caption"

    def unique_key(self):
        return self.id

    def validate(self) -> None:
        self.image.validate()
        if not self.instruction.strip():
            raise SchemaError("instruction", "must be non-empty")
        if not self.caption.strip():
            raise SchemaError("caption", "must be non-empty")

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True) -> "CaptionRecord":
        known, unknown = cls._split(d, strict)
        return cls(_require(known, "id"), FaceImageRef.from_dict(_require(known, "image"), strict),
                   _require(known, "instruction"), _require(known, "caption"), unknown)


@dataclass(frozen=True)
class RawAnnotationResponse(Record):
    image: FaceImageRef
    response_text: str
    latency_ms: float
    endpoint_id: str
    attempts: int = 1
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    kind = "raw"

    def validate(self) -> None:
        self.image.validate()
        if not isinstance(self.response_text, str):
            raise SchemaError("response_text", "must be a string")
        if self.latency_ms < 0:
            raise SchemaError("latency_ms", "must be >= 0")

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True) -> "RawAnnotationResponse":
        known, unknown = cls._split(d, strict)
        return cls(FaceImageRef.from_dict(_require(known, "image"), strict),
                   _require(known, "response_text"), _require(known, "latency_ms"),
                   known.get("endpoint_id", ""), known.get("attempts", 1), unknown)


FAILURE_REASONS = ("transport", "parse", "cleaned_empty", "fatal")


@dataclass(frozen=True)
class FailureRecord(Record):
    item_id: str
    reason: str
    detail: str = ""
    attempts: int = 0
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    kind = "failure"

    def validate(self) -> None:
        if self.reason not in FAILURE_REASONS:
            raise SchemaError("reason", f"{self.reason!r} not in {FAILURE_REASONS}")

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True) -> "FailureRecord":
        known, unknown = cls._split(d, strict)
        return cls(_require(known, "item_id"), _require(known, "reason"), known.get("detail", ""),
                   known.get("attempts", 0), unknown)


DROP_REASONS = ("indeterminate_value", "missing_face_description", "empty_attributes",
                "unknown_attribute_value")


@dataclass(frozen=True)
class DropRecord(Record):
    """One cleaning decision: a whole person (``attribute`` empty) or a single attribute."""

    image_id: str
    person_index: int
    reason: str
    attribute: str = ""
    value: str = ""
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    kind = "drop"

    def validate(self) -> None:
        if self.reason not in DROP_REASONS:
            raise SchemaError("reason", f"{self.reason!r} not in {DROP_REASONS}")

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True) -> "DropRecord":
        known, unknown = cls._split(d, strict)
        return cls(_require(known, "image_id"), _require(known, "person_index"),
                   _require(known, "reason"), known.get("attribute", ""), known.get("value", ""),
                   unknown)


ZERO_SHOT_VOCAB: dict[str, tuple[str, ...]] = {
    "eyelid_type": ("single", "double"),
    "eye_shape": ("phoenix", "almond", "peach blossom"),
    "nose_shape": ("upturned", "aquiline", "low bridge"),
    "lip_shape": ("cherry", "thick"),
}


@dataclass(frozen=True)
class ZeroShotAnnotation(Record):
    image: FaceImageRef
    category: str
    gold_value: str
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    kind = "zeroshot"

    def validate(self) -> None:
        self.image.validate()
        if self.category not in ZERO_SHOT_VOCAB:
            raise SchemaError("category", f"{self.category!r} not in {tuple(ZERO_SHOT_VOCAB)}")
        if self.gold_value not in ZERO_SHOT_VOCAB[self.category]:
            raise SchemaError("gold_value",
                              f"{self.gold_value!r} not in {ZERO_SHOT_VOCAB[self.category]}")

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True) -> "ZeroShotAnnotation":
        known, unknown = cls._split(d, strict)
        return cls(FaceImageRef.from_dict(_require(known, "image"), strict),
                   _require(known, "category"), _require(known, "gold_value"), unknown)


# ── line-delimited I/O ──────────────────────────────────────────────────────

_KINDS: dict[str, type] = {}


def register_kind(cls: type) -> type:
    _KINDS[cls.kind] = cls
    return cls


for _cls in (FaceImageRef, PersonAnnotation, QAPair, CaptionRecord, RawAnnotationResponse,
             FailureRecord, DropRecord, ZeroShotAnnotation):
    register_kind(_cls)


def record_class(kind: str | type) -> type:
    if isinstance(kind, type):
        return kind
    try:
        return _KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown record kind {kind!r}; known: {sorted(_KINDS)}") from None


def dumps_record(record: Record) -> str:
    return json.dumps(record.to_dict(), ensure_ascii=False, separators=(",", ":"))


def write_records(records: Iterable[Record], dest: str | Path | IO[str]) -> int:
    """Validate and write records one JSON object per line. Returns the count written.

    Raises RecordError carrying the index of the first invalid record; in that
    case nothing after it is written.
    """
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="\n") as f:
            return write_records(records, f)
    n = 0
    seen = set()
    for i, rec in enumerate(records):
        try:
            rec.validate()
        except SchemaError as e:
            raise RecordError(str(e), index=i, field_name=e.field) from e
        key = rec.unique_key()
        if key is not None:
            if key in seen:
                raise RecordError(f"duplicate key {key!r}", index=i, field_name="id")
            seen.add(key)
        dest.write(dumps_record(rec))
        dest.write("\n")
        n += 1
    return n


def iter_records(src: str | Path | IO[str], expected_kind: str | type,
                 strict: bool = True) -> Iterator[Record]:
    """Stream and validate records; errors carry the 1-based line number."""
    if isinstance(src, (str, Path)):
        with open(src, encoding="utf-8") as f:
            yield from iter_records(f, expected_kind, strict)
        return
    cls = record_class(expected_kind)
    seen = set()
    for lineno, line in enumerate(src, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise RecordError(f"malformed record ({e.msg})", line=lineno) from e
        try:
            rec = cls.from_dict(obj, strict=strict)
            rec.validate()
        except SchemaError as e:
            raise RecordError(str(e), line=lineno, field_name=e.field) from e
        except (TypeError, AttributeError) as e:
            raise RecordError(f"bad field type ({e})", line=lineno) from e
        key = rec.unique_key()
        if key is not None:
            if key in seen:
                raise RecordError(f"duplicate key {key!r}", line=lineno, field_name="id")
            seen.add(key)
        yield rec


def read_records(src: str | Path | IO[str], expected_kind: str | type,
                 strict: bool = True) -> list[Record]:
    return list(iter_records(src, expected_kind, strict))
