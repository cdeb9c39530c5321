"""Shared hypothesis strategies for record generators."""

from __future__ import annotations

import string

from hypothesis import strategies as st

from faceqa.annotator import POSITION_WORDS
from faceqa.schema import (
    DEFAULT_ATTRIBUTE_SCHEMA,
    LETTERS,
    SOURCE_DATASETS,
    FaceImageRef,
    GoldLabel,
    PersonAnnotation,
    QAPair,
)

ids = st.text(string.ascii_letters + string.digits + "_-/.", min_size=1, max_size=20)
free_text = st.text(min_size=1, max_size=60).filter(lambda s: s.strip())

images = st.builds(FaceImageRef, ids, st.text(max_size=40), st.sampled_from(SOURCE_DATASETS))

_enumerated = [s for s in DEFAULT_ATTRIBUTE_SCHEMA.attributes if s.allowed_values]


@st.composite
def attribute_maps(draw, min_size=0):
    specs = draw(st.lists(st.sampled_from(_enumerated), min_size=min_size, unique=True))
    return {s.name: draw(st.sampled_from(s.allowed_values)) for s in specs}


@st.composite
def persons(draw, image=None):
    image = image or draw(images)
    return PersonAnnotation(image, draw(st.integers(0, 20)), draw(st.sampled_from(("",) + POSITION_WORDS)),
                            draw(free_text), draw(attribute_maps()))


@st.composite
def qa_pairs(draw):
    image = draw(images)
    task = draw(st.sampled_from(("age", "yes_no", "multiple_choice", "description")))
    options = None
    if task == "age":
        gold = GoldLabel.number(draw(st.integers(1, 100)))
    elif task == "yes_no":
        gold = GoldLabel.boolean(draw(st.booleans()))
    elif task == "multiple_choice":
        texts = draw(st.lists(free_text, min_size=2, max_size=8, unique=True))
        options = tuple(zip(LETTERS, texts))
        gold = GoldLabel.letter(draw(st.sampled_from([o[0] for o in options])))
    else:
        gold = GoldLabel.text(draw(free_text))
    return QAPair(draw(ids), image, task, draw(free_text), gold, options,
                  draw(st.none() | free_text), draw(st.sampled_from(("", "age", "attribute"))))


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance PASS/FAIL lines at the end of the run."""
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda x: int(x.split("]")[0].split()[-1])):
            terminalreporter.write_line(line)
