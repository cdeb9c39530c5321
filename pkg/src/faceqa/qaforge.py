"""Question-answer generation: caption pairs, attribute QA, dataset reformulation, zero-shot suite.

Every generator is a pure function of its inputs and seed. Per-item randomness
is drawn from ``rng_for(seed, image_id, ...)`` so output never depends on the
order or parallelism in which items are processed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .schema import (
    DEFAULT_ATTRIBUTE_SCHEMA,
    LETTERS,
    ZERO_SHOT_VOCAB,
    AttributeSchema,
    CaptionRecord,
    FaceImageRef,
    GoldLabel,
    PersonAnnotation,
    QAPair,
    ZeroShotAnnotation,
    normalize_name,
)
from .seeding import derive_seed, rng_for
from .vocab import (
    AU_DESCRIPTIONS,
    RAFDB_CLASSES,
    ZERO_SHOT_NOUNS,
    ZERO_SHOT_QUESTION_FOCUS,
    attribute_display,
    canonical_celeba,
    load_feature_descriptions,
)

YES_NO_SUFFIX = "Answer directly with Yes or No."
MC_SUFFIX = "Answer with the option's letter from the given choices directly."
AGE_QUESTION = ("What is the age of the person in the picture? "
                "Estimate with a number from 1 to 100, such as 1,2,3,...")
GENDER_QUESTION = "Is the person in the picture {gender}? " + YES_NO_SUFFIX
EXPRESSION_QUESTION = "What's the expression of this person? {options} " + MC_SUFFIX
AU_QUESTION = "{description} Does the person in the image contains the AU of {au}? " + YES_NO_SUFFIX
ATTRIBUTE_QUESTION = ("Does the person in the image possess the property of {attribute}? "
                      + YES_NO_SUFFIX)

DESCRIBE_INSTRUCTIONS = (
    "Please describe the person in the picture in detail according to his/her face.",
    "Describe the face of the person in this image in detail.",
    "What does the person in the picture look like? Give a detailed description of the face.",
    "Provide a detailed caption focusing on the facial attributes of the people in the image.",
)


@dataclass(frozen=True)
class QuestionTemplate:
    task: str
    pattern: str
    answer_rule: str

    def fill(self, **slots: str) -> str:
        return self.pattern.format(**slots)


# Stage-2 templates; "{where}" is "the face in the image" or "the <position> face in the image".
ATTR_YES_NO = QuestionTemplate(
    "yes_no", 'Does {where} have the attribute "{attribute}: {value}"? ' + YES_NO_SUFFIX,
    "Yes when {value} is the annotated value, No for a distractor value")
GENDER_YES_NO = QuestionTemplate(
    "yes_no", "Is {where} {value}? " + YES_NO_SUFFIX,
    "Yes when {value} is the annotated gender")
SINGLE_GENDER_YES_NO = QuestionTemplate(
    "yes_no", GENDER_QUESTION.replace("{gender}", "{value}"),
    "Yes when {value} is the annotated gender")
ATTR_MC = QuestionTemplate(
    "multiple_choice",
    "Which option best describes the {attribute} of {where}? {options} " + MC_SUFFIX,
    "letter of the option holding the annotated value")


def format_options(options: Sequence[tuple[str, str]]) -> str:
    return " ".join(f"{letter}.{text}" for letter, text in options)


def shuffle_options(options: Sequence[str], gold: str,
                    seed: int | None) -> tuple[tuple[tuple[str, str], ...], str]:
    """Permute ``options`` with a seeded generator and letter them from 'A'.

    ``seed=None`` keeps the given order. Returns the lettered options and the
    letter now holding ``gold``.
    """
    opts = list(options)
    if not 2 <= len(opts) <= len(LETTERS):
        raise ValueError(f"need 2..{len(LETTERS)} options, got {len(opts)}")
    if len(set(opts)) != len(opts):
        raise ValueError(f"duplicate option texts make the gold ambiguous: {opts}")
    if gold not in opts:
        raise ValueError(f"gold {gold!r} is not among the options")
    if seed is not None:
        rng_for("shuffle", seed).shuffle(opts)
    lettered = tuple(zip(LETTERS, opts))
    gold_letter = LETTERS[opts.index(gold)]
    return lettered, gold_letter


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", text.casefold()).strip("_")


# ── stage 1: caption pairs ──────────────────────────────────────────────────


def gen_caption_pairs(annotations: Iterable[PersonAnnotation],
                      seed: int = 0) -> tuple[list[CaptionRecord], list[str]]:
    """One caption record per image; returns (records, ids of skipped images)."""
    order: list[str] = []
    images: dict[str, FaceImageRef] = {}
    captions: dict[str, list[str]] = {}
    for a in annotations:
        if a.image.id not in images:
            order.append(a.image.id)
            images[a.image.id] = a.image
            captions[a.image.id] = []
        text = a.caption.strip()
        if text and text not in captions[a.image.id]:
            captions[a.image.id].append(text)
    records, skipped = [], []
    for image_id in order:
        merged = "\n".join(captions[image_id])
        if not merged:
            skipped.append(image_id)
            continue
        k = derive_seed(seed, image_id, "instruction") % len(DESCRIBE_INSTRUCTIONS)
        records.append(CaptionRecord(f"{image_id}:caption", images[image_id],
                                     DESCRIBE_INSTRUCTIONS[k], merged))
    return records, skipped


# ── stage 2: attribute QA from annotations ──────────────────────────────────

MC_MAX_OPTIONS = 4


def _where(position: str, multi_face: bool) -> str:
    if multi_face:
        if not position:
            raise ValueError("multi_face requires a position phrase")
        return f"the {position} face in the image"
    return "the face in the image"


def gen_attribute_qa(annotation: PersonAnnotation, multi_face: bool, seed: int,
                     schema: AttributeSchema = DEFAULT_ATTRIBUTE_SCHEMA) -> list[QAPair]:
    """Yes/no (true value), yes/no (distractor) and multiple-choice pairs per attribute."""
    where = _where(annotation.position, multi_face)
    img = annotation.image
    base_id = f"{img.id}#p{annotation.person_index}"
    out: list[QAPair] = []
    for name, value in annotation.attributes.items():
        spec = schema.lookup(name)
        if spec is None:
            continue
        rng = rng_for(seed, img.id, annotation.person_index, spec.name)
        attr = normalize_name(spec.name)
        slug = _slug(spec.name)
        is_gender = attr == "gender"
        if is_gender and not multi_face:
            yn = SINGLE_GENDER_YES_NO
        elif is_gender:
            yn = GENDER_YES_NO
        else:
            yn = ATTR_YES_NO
        shown = value.lower() if is_gender else value
        out.append(QAPair(f"{base_id}:{slug}:yes", img, "yes_no",
                          yn.fill(where=where, attribute=attr, value=shown),
                          GoldLabel.boolean(True), category="attribute"))
        others = [v for v in spec.allowed_values if v.casefold() != value.casefold()]
        if not others:
            continue
        distractor = rng.choice(others)
        shown = distractor.lower() if is_gender else distractor
        out.append(QAPair(f"{base_id}:{slug}:no", img, "yes_no",
                          yn.fill(where=where, attribute=attr, value=shown),
                          GoldLabel.boolean(False), category="attribute"))
        if len(spec.allowed_values) < 3:
            continue
        picks = rng.sample(others, min(len(others), MC_MAX_OPTIONS - 1))
        options, gold_letter = shuffle_options([value] + picks, value, rng.getrandbits(63))
        out.append(QAPair(f"{base_id}:{slug}:mc", img, "multiple_choice",
                          ATTR_MC.fill(attribute=attr, where=where, options=format_options(options)),
                          GoldLabel.letter(gold_letter), options=options, category="attribute"))
    return out


def gen_stage2_qa(annotations: Sequence[PersonAnnotation], seed: int,
                  multi_face: str | bool = "auto",
                  schema: AttributeSchema = DEFAULT_ATTRIBUTE_SCHEMA) -> list[QAPair]:
    """Attribute QA for a whole annotation file; 'auto' asks positionally when an image has >1 person."""
    per_image: dict[str, int] = {}
    for a in annotations:
        per_image[a.image.id] = per_image.get(a.image.id, 0) + 1
    out = []
    for a in annotations:
        mf = per_image[a.image.id] > 1 if multi_face == "auto" else bool(multi_face)
        if mf and not a.position:
            mf = False
        out.extend(gen_attribute_qa(a, mf, seed, schema))
    return out


# ── reformulation of labelled face datasets ─────────────────────────────────


def reformulate_age(image: FaceImageRef, gold_age: int) -> QAPair:
    if isinstance(gold_age, bool) or not isinstance(gold_age, int) or not 1 <= gold_age <= 100:
        raise ValueError(f"age {gold_age!r} outside [1, 100]")
    return QAPair(f"{image.id}:age", image, "age", AGE_QUESTION, GoldLabel.number(gold_age),
                  category="age")


_GENDER_ALIASES = {"male": "male", "m": "male", "man": "male",
                   "female": "female", "f": "female", "woman": "female"}


def reformulate_gender(image: FaceImageRef, gold_gender: str, seed: int = 0,
                       polarity: str | None = None) -> QAPair:
    """Ask "...female?" or "...male?" by a seeded per-image coin so answers balance."""
    gender = _GENDER_ALIASES.get(str(gold_gender).strip().casefold())
    if gender is None:
        raise ValueError(f"unknown gender label {gold_gender!r}")
    if polarity is None:
        polarity = "female" if rng_for(seed, image.id, "gender").random() < 0.5 else "male"
    elif polarity not in ("male", "female"):
        raise ValueError(f"polarity must be 'male' or 'female', got {polarity!r}")
    return QAPair(f"{image.id}:gender", image, "yes_no", GENDER_QUESTION.format(gender=polarity),
                  GoldLabel.boolean(gender == polarity), category="gender")


def reformulate_expression(image: FaceImageRef, gold_class: str,
                           class_list: Sequence[str] = RAFDB_CLASSES,
                           seed: int | None = None) -> QAPair:
    if gold_class not in class_list:
        raise ValueError(f"expression {gold_class!r} not in {tuple(class_list)}")
    item_seed = None if seed is None else derive_seed(seed, image.id, "expression")
    options, gold_letter = shuffle_options(list(class_list), gold_class, item_seed)
    return QAPair(f"{image.id}:expression", image, "multiple_choice",
                  EXPRESSION_QUESTION.format(options=format_options(options)),
                  GoldLabel.letter(gold_letter), options=options, category="expression")


def reformulate_au(image: FaceImageRef, au_name: str, au_description: str | None,
                   present: bool, au_set: Iterable[str] = tuple(AU_DESCRIPTIONS)) -> QAPair:
    if au_name not in set(au_set):
        raise ValueError(f"{au_name!r} is not in the action-unit label set")
    if not au_description or not au_description.strip():
        raise ValueError(f"action unit {au_name!r} needs a description")
    question = AU_QUESTION.format(description=au_description.strip(), au=au_name)
    return QAPair(f"{image.id}:au:{_slug(au_name)}", image, "yes_no", question,
                  GoldLabel.boolean(present), aux_description=au_description.strip(),
                  category="au")


def reformulate_attribute(image: FaceImageRef, attr_name: str, attr_description: str | None,
                          present: bool) -> QAPair:
    canon = canonical_celeba(attr_name)
    if canon is None:
        raise ValueError(f"{attr_name!r} is not one of the 40 face attributes")
    question = ATTRIBUTE_QUESTION.format(attribute=attribute_display(canon))
    desc = (attr_description or "").strip() or None
    if desc:
        question = f"{desc} {question}"
    return QAPair(f"{image.id}:attr:{_slug(canon)}", image, "yes_no", question,
                  GoldLabel.boolean(present), aux_description=desc, category="attribute")


# ── zero-shot attribute suite ───────────────────────────────────────────────

ZERO_SHOT_TARGET_RATIO = (300, 760)  # images : questions of the reference suite


def _feature_phrase(category: str, value: str) -> str:
    return f"{value} {ZERO_SHOT_NOUNS[category]}"


def build_zeroshot_suite(annotated: Sequence[ZeroShotAnnotation], seed: int = 0,
                         descriptions: dict[str, dict[str, str]] | None = None,
                         n_questions: int | None = None) -> list[QAPair]:
    """Two or three described questions per image.

    Every image gets a multiple-choice question over its category plus a yes/no
    question; ``n_questions - 2 * len(annotated)`` images (seeded choice) get a
    third. The default total follows the reference 300-image / 760-question ratio.
    """
    descriptions = descriptions or load_feature_descriptions(None)
    n = len(annotated)
    if n_questions is None:
        images, questions = ZERO_SHOT_TARGET_RATIO
        n_questions = (n * questions + images // 2) // images
    if not 2 * n <= n_questions <= 3 * n:
        raise ValueError(f"{n_questions} questions impossible for {n} images at 2-3 each")
    for i, a in enumerate(annotated):
        vocab = ZERO_SHOT_VOCAB.get(a.category)
        if vocab is None:
            raise ValueError(f"item {i}: unknown category {a.category!r}")
        if a.gold_value not in vocab:
            raise ValueError(f"item {i}: {a.gold_value!r} not in {a.category} vocabulary {vocab}")
    ids = [a.image.id for a in annotated]
    third = set(rng_for(seed, "zeroshot-third").sample(range(n), n_questions - 2 * n))

    out: list[QAPair] = []
    for i, a in enumerate(annotated):
        cat, gold = a.category, a.gold_value
        vocab = ZERO_SHOT_VOCAB[cat]
        rng = rng_for(seed, ids[i], "zeroshot")
        category = f"zs_{cat}"
        desc_all = " ".join(descriptions[cat][v] for v in vocab)
        options, gold_letter = shuffle_options(list(vocab), gold, rng.getrandbits(63))
        mc_question = (f"{desc_all} Look carefully at {ZERO_SHOT_QUESTION_FOCUS[cat]} of the "
                       f"person in the image and decide which type it is. "
                       f"{format_options(options)} {MC_SUFFIX}")
        out.append(QAPair(f"{ids[i]}:zs:{cat}:mc", a.image, "multiple_choice", mc_question,
                          GoldLabel.letter(gold_letter), options=options,
                          aux_description=desc_all, category=category))
        others = [v for v in vocab if v != gold]
        distractor = rng.choice(others)
        if i in third:
            asked = [gold, distractor]
        else:
            asked = [gold if rng.random() < 0.5 else distractor]
        for value in asked:
            desc = descriptions[cat][value]
            q = (f"{desc} Does the person in the image have {_feature_phrase(cat, value)}? "
                 f"{YES_NO_SUFFIX}")
            out.append(QAPair(f"{ids[i]}:zs:{cat}:{_slug(value)}", a.image, "yes_no", q,
                              GoldLabel.boolean(value == gold), aux_description=desc,
                              category=category))
    return out
