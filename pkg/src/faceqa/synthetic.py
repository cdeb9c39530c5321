"""Synthetic fixtures: random annotations, mock annotator responses, label files.

Used by the test suite, the runnable scripts, and the ``mock://`` endpoints of
the CLI. Nothing here imitates real data distributions.
"""

from __future__ import annotations

import random
from pathlib import Path

from .annotator import POSITION_WORDS, format_annotation_response
from .schema import DEFAULT_ATTRIBUTE_SCHEMA, AttributeSchema, FaceImageRef, PersonAnnotation
from .seeding import rng_for
from .vocab import AU_BY_NUMBER, CELEBA_ATTRIBUTES

_SUBJECTS = ("The woman", "The man", "The child", "The person", "This individual", "The teenager")
_PHRASES = (
    "has a calm expression", "is smiling warmly", "has short dark hair", "wears round glasses",
    "has fair skin and light freckles", "looks toward the camera", "has a narrow face",
    "has bright eyes", "stands near a window", "has wavy hair tied back",
    "shows a slight frown", "has high cheekbones", "is photographed outdoors",
)
_FACE_WORDS = ("face", "eyes", "hair", "skin", "expression")


def random_sentence(rng: random.Random, facial: bool = True) -> str:
    phrase = rng.choice(_PHRASES)
    if facial and not any(w in phrase for w in _FACE_WORDS):
        phrase += f", with a clear view of the {rng.choice(_FACE_WORDS)}"
    return f"{rng.choice(_SUBJECTS)} {phrase}."


def random_caption(rng: random.Random, facial: bool = True, max_lines: int = 2) -> str:
    lines = []
    for _ in range(rng.randint(1, max_lines)):
        lines.append(" ".join(random_sentence(rng, facial) for _ in range(rng.randint(1, 3))))
    return "\n".join(lines)


def random_attributes(rng: random.Random, schema: AttributeSchema = DEFAULT_ATTRIBUTE_SCHEMA,
                      k: int | None = None) -> dict[str, str]:
    specs = [s for s in schema.attributes if s.allowed_values]
    k = rng.randint(3, len(specs)) if k is None else k
    chosen = rng.sample(specs, k)
    chosen.sort(key=lambda s: schema.attributes.index(s))
    return {s.name: rng.choice(s.allowed_values) for s in chosen}


def random_persons(rng: random.Random, image: FaceImageRef, n: int | None = None,
                   schema: AttributeSchema = DEFAULT_ATTRIBUTE_SCHEMA,
                   shared_caption: str = "") -> list[PersonAnnotation]:
    n = rng.randint(1, 4) if n is None else n
    positions = rng.sample(POSITION_WORDS, n) if n > 1 else [rng.choice(("", "center"))]
    persons = []
    for i in range(n):
        caption = shared_caption or random_caption(rng)
        persons.append(PersonAnnotation(image, i, positions[i], caption,
                                        random_attributes(rng, schema)))
    return persons


def mock_annotation_text(image: FaceImageRef, seed: int = 0,
                         indeterminate_rate: float = 0.1) -> str:
    """Deterministic annotator output for ``image`` in the requested bullet format."""
    rng = rng_for(seed, image.id, "mock-annotation")
    persons = random_persons(rng, image, rng.randint(1, 3))
    noisy = []
    for p in persons:
        attrs = {k: ("Cannot determine." if rng.random() < indeterminate_rate else v)
                 for k, v in p.attributes.items()}
        noisy.append(PersonAnnotation(p.image, p.person_index, p.position, p.caption, attrs))
    shared = random_caption(rng) if rng.random() < 0.5 else ""
    return format_annotation_response(noisy, shared)


def image_refs(n: int, prefix: str = "img", dataset: str = "laion_face") -> list[FaceImageRef]:
    return [FaceImageRef(f"{prefix}{i:06d}", f"images/{prefix}{i:06d}.jpg", dataset)
            for i in range(n)]


# ── label files in the published layouts ───────────────────────────────────


def write_agedb_list(path: str | Path, n: int, seed: int = 0) -> Path:
    rng = rng_for(seed, "agedb")
    lines = [f"{i}_Person{i}_{rng.randint(1, 100)}_{rng.choice('mf')}.jpg" for i in range(n)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


def write_rafdb_labels(path: str | Path, n: int, seed: int = 0) -> Path:
    rng = rng_for(seed, "rafdb")
    lines = [f"test_{i + 1:04d}.jpg {rng.randint(1, 7)}" for i in range(n)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


def write_emotionet_labels(path: str | Path, n: int, seed: int = 0,
                           unlabelled_rate: float = 0.0) -> Path:
    rng = rng_for(seed, "emotionet")
    header = ["image"] + [f"AU{num}" for num in AU_BY_NUMBER]
    lines = [",".join(header)]
    for i in range(n):
        cells = [("999" if rng.random() < unlabelled_rate else str(rng.randint(0, 1)))
                 for _ in AU_BY_NUMBER]
        lines.append(",".join([f"en_{i:05d}.jpg", *cells]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


def write_attribute_matrix(path: str | Path, n: int, seed: int = 0) -> Path:
    """CelebA ``list_attr`` layout: count line, 40 names, then ``file +/-1 x 40``."""
    rng = rng_for(seed, "attributes")
    names = [a for a, _ in CELEBA_ATTRIBUTES]
    lines = [str(n), " ".join(names)]
    for i in range(n):
        vals = " ".join(rng.choice(("1", "-1")).rjust(2) for _ in names)
        lines.append(f"{i + 1:06d}.jpg {vals}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


# Test-split sizes of the four reformulated benchmark datasets.
BENCHMARK_SIZES = {"agedb": 16_488, "rafdb": 3_068, "emotionet": 2_000, "lfwa": 6_880}

_WRITERS = {
    "agedb": ("agedb_files.txt", write_agedb_list),
    "rafdb": ("rafdb_labels.txt", write_rafdb_labels),
    "emotionet": ("emotionet_aus.csv", write_emotionet_labels),
    "lfwa": ("lfwa_attributes.txt", write_attribute_matrix),
}


def build_synthetic_benchmark(workdir: str | Path, seed: int = 0,
                              sizes: dict[str, int] | None = None,
                              unlabelled_rate: float = 0.0) -> dict[str, "Reformulated"]:
    """Write synthetic label files shaped like the benchmark splits and reformulate them."""
    from .datasets import reformulate_file

    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    out = {}
    for dataset, n in (sizes or BENCHMARK_SIZES).items():
        filename, writer = _WRITERS[dataset]
        extra = {"unlabelled_rate": unlabelled_rate} if dataset == "emotionet" else {}
        path = writer(workdir / filename, n, seed, **extra)
        out[dataset] = reformulate_file(dataset, path, seed)
    return out
