"""Free-form answer extraction for yes/no, option-letter and age questions.

Parsers are total: any string yields exactly one ParsedAnswer, and every
successful parse names the rule that fired so corpora can be audited per rule.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Sequence

from .schema import Record, SchemaError, _require

VARIANTS = ("number", "yes_no", "letter", "unparseable")


@dataclass(frozen=True)
class ParsedAnswer(Record):
    variant: str
    value: Any = None
    raw_excerpt: str = ""
    rule: str = ""
    reason: str = ""  # why parsing failed, for unparseable answers
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    kind = "parsed"

    @property
    def parsed(self) -> bool:
        return self.variant != "unparseable"

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise SchemaError("variant", f"{self.variant!r} not in {VARIANTS}")
        if self.variant == "number" and (isinstance(self.value, bool) or not isinstance(self.value, int)):
            raise SchemaError("value", "number answers must be integers")
        if self.variant == "yes_no" and not isinstance(self.value, bool):
            raise SchemaError("value", "yes/no answers must be booleans")
        if self.variant == "letter" and not (isinstance(self.value, str) and len(self.value) == 1):
            raise SchemaError("value", "letter answers must be one character")

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True) -> "ParsedAnswer":
        known, unknown = cls._split(d, strict)
        return cls(_require(known, "variant"), known.get("value"), known.get("raw_excerpt", ""),
                   known.get("rule", ""), known.get("reason", ""), unknown)


def unparseable(reason: str) -> ParsedAnswer:
    return ParsedAnswer("unparseable", None, "", "", reason)


# ── yes / no ────────────────────────────────────────────────────────────────

_FILLER = re.compile(
    r"^\s*(?:(?:the\s+)?(?:final\s+)?answer(?:\s+is)?\s*[:\-]?|assistant\s*:|response\s*:)\s*",
    re.IGNORECASE,
)
_YES_NO = re.compile(r"\b(yes|no)\b", re.IGNORECASE)


def _strip_filler(text: str) -> str:
    prev = None
    while prev != text:
        prev = text
        text = _FILLER.sub("", text)
        text = text.lstrip(" \t\r\n*\"'`([")
    return text


def parse_yes_no(text: str) -> ParsedAnswer:
    """Earliest standalone "yes"/"no" token, case-insensitive; fillers like "Answer:" skipped."""
    if not isinstance(text, str):
        return unparseable("not_text")
    body = _strip_filler(text)
    m = _YES_NO.search(body)
    if not m:
        return unparseable("no_token")
    rule = "initial_token" if m.start() == 0 else "first_token"
    return ParsedAnswer("yes_no", m.group(1).lower() == "yes", m.group(0), rule)


# ── option letter ───────────────────────────────────────────────────────────


def _letters_pattern(letters: Sequence[str]) -> str:
    return "[" + "".join(re.escape(x) for x in letters) + "]"


def parse_option_letter(text: str, options: Sequence[tuple[str, str]]) -> ParsedAnswer:
    """Resolve a multiple-choice answer to one of the option letters.

    Rules, first decisive one wins:
      leading_letter  answer opens with the letter: "D", "D.", "(D)", "D) happiness"
      keyword         "option D", "answer is D", "choice (D)"
      bare_token      standalone uppercase letter tokens anywhere ("I pick D")
      option_text     exactly one option's text appears (longest match wins on overlap)
    Two different letters within one rule make the answer ambiguous.
    """
    if not isinstance(text, str):
        return unparseable("not_text")
    if not options:
        return unparseable("no_options")
    letters = [o[0] for o in options]
    L = _letters_pattern(letters)
    body = _strip_filler(text).strip()

    m = re.match(rf"^\(?({L})\)?(?:$|[.:)\]]|\s*$)", body)
    if m:
        return ParsedAnswer("letter", m.group(1), m.group(0), "leading_letter")

    found = [(mm.group(1), mm.group(0)) for mm in re.finditer(
        rf"(?i:\b(?:option|choice|letter|answer(?:\s+is)?|answer\s+would\s+be))"
        rf"\s*[:\-]?\s*\(?({L})\)?(?![A-Za-z])", text)]
    decided = _decide(found, "keyword")
    if decided is not None:
        return decided

    found = []
    for mm in re.finditer(rf"(?<![A-Za-z'’])\(?({L})\)?(?![A-Za-z'’])", text):
        letter = mm.group(1)
        tail = text[mm.end():]
        # "A" / "I" used as an article or pronoun before a lowercase word
        if (letter in ("A", "I") and mm.group(0) == letter and re.match(r"\s+[a-z]", tail)
                and not re.match(r"\s+(?:or|and|nor|vs)\b", tail)):
            continue
        found.append((letter, mm.group(0)))
    decided = _decide(found, "bare_token")
    if decided is not None:
        return decided

    spans = []
    lowered = text.casefold()
    for letter, opt in options:
        pat = re.compile(rf"(?<![\w-]){re.escape(opt.casefold())}(?![\w-])")
        for mm in pat.finditer(lowered):
            spans.append((mm.start(), mm.end(), letter))
    # an option whose every match lies inside a longer option's match does not count
    hits = set()
    for s, e, letter in spans:
        covered = any(s2 <= s and e <= e2 and (e2 - s2) > (e - s) for s2, e2, _ in spans)
        if not covered:
            hits.add(letter)
    if len(hits) == 1:
        letter = hits.pop()
        excerpt = next(text[s:e] for s, e, lt in spans if lt == letter)
        return ParsedAnswer("letter", letter, excerpt, "option_text")
    if len(hits) > 1:
        return unparseable("ambiguous")
    return unparseable("no_match")


def _decide(found: list[tuple[str, str]], rule: str) -> ParsedAnswer | None:
    distinct = {f[0] for f in found}
    if not distinct:
        return None
    if len(distinct) > 1:
        return unparseable("ambiguous")
    return ParsedAnswer("letter", found[0][0], found[0][1], rule)


# ── age ─────────────────────────────────────────────────────────────────────

_NUMBER = re.compile(
    r"(?<![\d.])(\d{1,3})(?:\.\d+)?(?:\s*(?:-|–|—|to)\s*(\d{1,3})(?:\.\d+)?)?(?![\d])"
)


def parse_age(text: str) -> ParsedAnswer:
    """First integer in [1, 100]; a range "30-35" gives its midpoint rounded down."""
    if not isinstance(text, str):
        return unparseable("not_text")
    for m in _NUMBER.finditer(text):
        lo = int(m.group(1))
        if m.group(2) is not None:
            hi = int(m.group(2))
            if 1 <= lo <= 100 and 1 <= hi <= 100:
                return ParsedAnswer("number", (lo + hi) // 2, m.group(0), "range_midpoint")
        if 1 <= lo <= 100:
            return ParsedAnswer("number", lo, m.group(1), "integer")
        if m.group(2) is not None and 1 <= int(m.group(2)) <= 100:
            return ParsedAnswer("number", int(m.group(2)), m.group(2), "integer")
    return unparseable("no_number")


def parse_answer(text: str, task: str, options: Sequence[tuple[str, str]] | None = None) -> ParsedAnswer:
    if task == "yes_no":
        return parse_yes_no(text)
    if task == "multiple_choice":
        return parse_option_letter(text, options or ())
    if task == "age":
        return parse_age(text)
    return unparseable("unscored_task")
