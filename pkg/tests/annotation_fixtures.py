"""Shared annotation corpora and the brute-force cleaning oracle."""

from __future__ import annotations

import random

from faceqa.annotator import FACE_KEYWORDS, INDETERMINATE_VALUES, CleaningConfig, normalize_value
from faceqa.schema import FaceImageRef, PersonAnnotation
from faceqa.synthetic import random_caption, random_persons


def random_annotation_set(rng: random.Random, img: FaceImageRef):
    shared = random_caption(rng) if rng.random() < 0.4 else ""
    persons = random_persons(rng, img, rng.randint(1, 4), shared_caption=shared)
    return persons, shared


def injected_corpus(rng: random.Random, n: int) -> list[PersonAnnotation]:
    """Single-person annotations with indeterminate values and non-facial captions injected."""
    corpus = []
    for i in range(n):
        img = FaceImageRef(f"c{i}", "u", "laion_face")
        (p,) = random_persons(rng, img, 1)
        attrs = dict(p.attributes)
        k = rng.randint(0, len(attrs))
        for name in rng.sample(sorted(attrs), k):
            attrs[name] = rng.choice(INDETERMINATE_VALUES + ("Cannot determine.", "N/A", "Unknown!"))
        caption = p.caption if rng.random() < 0.9 else "A sunny day at the park."
        corpus.append(PersonAnnotation(img, 0, p.position, caption, attrs))
    return corpus


def brute_force_clean(persons, cfg: CleaningConfig = CleaningConfig()):
    """Returns ([(person_index, surviving attrs)], [dropped person_index])."""
    indeterminate = {normalize_value(v) for v in cfg.indeterminate_values}
    kept, dropped = [], []
    for p in persons:
        surviving = {}
        for name, value in p.attributes.items():
            if normalize_value(value) in indeterminate:
                continue
            surviving[name] = value  # corpus uses only schema spellings and allowed values
        words = set(normalize_value(p.caption).replace("-", " ").split())
        facial = bool(words & set(FACE_KEYWORDS))
        if len(surviving) < cfg.min_attributes or not facial:
            dropped.append(p.person_index)
        else:
            kept.append((p.person_index, surviving))
    return kept, dropped
