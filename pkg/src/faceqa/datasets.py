"""Adapters turning published face-dataset label files into QA pairs.

Adapter contracts (one per ``--dataset``):

agedb
    Any text/CSV file whose first column is an AgeDB filename
    ``<id>_<Name>_<age>_<m|f>.jpg``. Emits an age pair and a gender pair per image.
rafdb
    ``list_patition_label.txt`` lines ``<file> <label>`` with labels 1..7 in the
    order surprise, fear, disgust, happiness, sadness, anger, neutral.
emotionet
    CSV with a header: first column the image file, then one column per action
    unit named ``AU<n>`` or by AU name; cells 1 (present), 0 (absent), 999 (unlabelled, skipped).
lfwa / celeba
    The CelebA ``list_attr_celeba.txt`` layout (optional count line, a line of
    the 40 attribute names, then ``<file> <+1/-1 x 40>``), or a CSV with header
    ``image_id,<40 names>``. Emits one yes/no pair per image and attribute.
utkface
    Filenames ``<age>_<gender>_<race>_<date>.jpg`` (gender 0 = male, 1 = female).
    Templates reuse the AgeDB wording; not taken from any published example.
affectnet
    CSV ``<file>,<expression>`` with AffectNet indices 0..7; other codes skipped.
biwi
    CSV ``<file>,<yaw>,<pitch>,<roll>`` in degrees. Own head-pose template
    (left / frontal / right by yaw sign beyond 15 degrees), not a published one.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .qaforge import (
    MC_SUFFIX,
    format_options,
    reformulate_age,
    reformulate_attribute,
    reformulate_au,
    reformulate_expression,
    reformulate_gender,
    shuffle_options,
)
from .schema import FaceImageRef, GoldLabel, QAPair
from .seeding import derive_seed
from .vocab import (
    AFFECTNET_CLASSES,
    AU_BY_NUMBER,
    AU_DESCRIPTIONS,
    CELEBA_ATTRIBUTES,
    CELEBA_DESCRIPTIONS,
    RAFDB_CLASSES,
    canonical_celeba,
)

DATASETS = ("agedb", "rafdb", "emotionet", "lfwa", "celeba", "utkface", "affectnet", "biwi")


@dataclass
class Reformulated:
    pairs: list[QAPair] = field(default_factory=list)
    skips: list[tuple[int, str]] = field(default_factory=list)  # (line number, reason)


def _image(dataset: str, filename: str, root: Path | None) -> FaceImageRef:
    uri = str(root / filename) if root is not None else filename
    return FaceImageRef(f"{dataset}/{filename}", uri, dataset)


def _rows(text: str) -> list[tuple[int, list[str]]]:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if "," in line:
            cells = next(csv.reader(io.StringIO(line)))
        else:
            cells = line.split()
        rows.append((lineno, [c.strip() for c in cells]))
    return rows


_AGEDB_NAME = re.compile(r"^(\d+)_(.+)_(\d+)_([mfMF])\.\w+$")


def agedb(text: str, seed: int, root: Path | None = None, **_) -> Reformulated:
    out = Reformulated()
    for lineno, cells in _rows(text):
        name = Path(cells[0]).name
        m = _AGEDB_NAME.match(name)
        if not m:
            out.skips.append((lineno, f"not an AgeDB filename: {name}"))
            continue
        img = _image("agedb", name, root)
        age = int(m.group(3))
        if 1 <= age <= 100:
            out.pairs.append(reformulate_age(img, age))
        else:
            out.skips.append((lineno, f"age {age} outside [1, 100]"))
        out.pairs.append(reformulate_gender(img, m.group(4), seed))
    return out


def rafdb(text: str, seed: int, root: Path | None = None, shuffle: bool = True,
          **_) -> Reformulated:
    out = Reformulated()
    for lineno, cells in _rows(text):
        if len(cells) < 2 or not cells[1].isdigit() or not 1 <= int(cells[1]) <= 7:
            out.skips.append((lineno, "expected '<file> <label 1..7>'"))
            continue
        img = _image("rafdb", cells[0], root)
        out.pairs.append(reformulate_expression(img, RAFDB_CLASSES[int(cells[1]) - 1],
                                                RAFDB_CLASSES, seed if shuffle else None))
    return out


def _au_name(column: str) -> str | None:
    m = re.fullmatch(r"AU\s*0*(\d+)", column.strip(), re.IGNORECASE)
    if m:
        return AU_BY_NUMBER.get(int(m.group(1)))
    for name in AU_DESCRIPTIONS:
        if name.casefold() == column.strip().casefold():
            return name
    return None


def emotionet(text: str, seed: int, root: Path | None = None, **_) -> Reformulated:
    rows = _rows(text)
    out = Reformulated()
    if not rows:
        return out
    _, header = rows[0]
    columns = []
    for col in header[1:]:
        name = _au_name(col)
        if name is None:
            raise ValueError(f"unrecognised action-unit column {col!r}")
        columns.append(name)
    for lineno, cells in rows[1:]:
        if len(cells) != len(header):
            out.skips.append((lineno, f"expected {len(header)} cells, got {len(cells)}"))
            continue
        img = _image("emotionet", cells[0], root)
        for name, cell in zip(columns, cells[1:]):
            if cell in ("1", "1.0"):
                present = True
            elif cell in ("0", "0.0"):
                present = False
            else:
                out.skips.append((lineno, f"{name}: unlabelled value {cell!r}"))
                continue
            out.pairs.append(reformulate_au(img, name, AU_DESCRIPTIONS[name], present))
    return out


def _attribute_matrix(dataset: str, text: str, root: Path | None,
                      descriptions: bool) -> Reformulated:
    rows = _rows(text)
    out = Reformulated()
    if rows and len(rows[0][1]) == 1 and rows[0][1][0].isdigit():
        rows = rows[1:]  # leading image count
    if not rows:
        return out
    _, header = rows[0]
    names = header[1:] if len(header) == len(CELEBA_ATTRIBUTES) + 1 else header
    attrs = []
    for col in names:
        canon = canonical_celeba(col)
        if canon is None:
            raise ValueError(f"unrecognised attribute column {col!r}")
        attrs.append(canon)
    for lineno, cells in rows[1:]:
        if len(cells) != len(attrs) + 1:
            out.skips.append((lineno, f"expected {len(attrs) + 1} cells, got {len(cells)}"))
            continue
        img = _image(dataset, cells[0], root)
        for attr, cell in zip(attrs, cells[1:]):
            if cell in ("1", "1.0", "+1"):
                present = True
            elif cell in ("-1", "0", "0.0", "-1.0"):
                present = False
            else:
                out.skips.append((lineno, f"{attr}: unreadable value {cell!r}"))
                continue
            desc = CELEBA_DESCRIPTIONS[attr] if descriptions else None
            out.pairs.append(reformulate_attribute(img, attr, desc, present))
    return out


def lfwa(text: str, seed: int, root: Path | None = None, descriptions: bool = True,
         **_) -> Reformulated:
    return _attribute_matrix("lfwa", text, root, descriptions)


def celeba(text: str, seed: int, root: Path | None = None, descriptions: bool = True,
           **_) -> Reformulated:
    return _attribute_matrix("celeba", text, root, descriptions)


_UTK_NAME = re.compile(r"^(\d+)_([01])_(\d+)_\w+")


def utkface(text: str, seed: int, root: Path | None = None, **_) -> Reformulated:
    out = Reformulated()
    for lineno, cells in _rows(text):
        name = Path(cells[0]).name
        m = _UTK_NAME.match(name)
        if not m:
            out.skips.append((lineno, f"not a UTKFace filename: {name}"))
            continue
        img = _image("utkface", name, root)
        age = int(m.group(1))
        if 1 <= age <= 100:
            out.pairs.append(reformulate_age(img, age))
        else:
            out.skips.append((lineno, f"age {age} outside [1, 100]"))
        out.pairs.append(reformulate_gender(img, "male" if m.group(2) == "0" else "female", seed))
    return out


def affectnet(text: str, seed: int, root: Path | None = None, **_) -> Reformulated:
    out = Reformulated()
    for lineno, cells in _rows(text):
        if len(cells) < 2 or not cells[1].lstrip("-").isdigit():
            if lineno == 1:
                continue  # header
            out.skips.append((lineno, "expected '<file>,<expression index>'"))
            continue
        code = int(cells[1])
        if not 0 <= code < len(AFFECTNET_CLASSES):
            out.skips.append((lineno, f"expression code {code} is not a basic expression"))
            continue
        img = _image("affectnet", cells[0], root)
        out.pairs.append(reformulate_expression(img, AFFECTNET_CLASSES[code], AFFECTNET_CLASSES,
                                                seed))
    return out


HEAD_POSE_CLASSES = ("left", "frontal", "right")
HEAD_POSE_QUESTION = "Which direction is the person's head turned? {options} " + MC_SUFFIX


def biwi(text: str, seed: int, root: Path | None = None, threshold: float = 15.0,
         **_) -> Reformulated:
    out = Reformulated()
    for lineno, cells in _rows(text):
        try:
            yaw = float(cells[1])
        except (IndexError, ValueError):
            if lineno == 1:
                continue
            out.skips.append((lineno, "expected '<file>,<yaw>,<pitch>,<roll>'"))
            continue
        gold = "left" if yaw > threshold else "right" if yaw < -threshold else "frontal"
        img = _image("biwi", cells[0], root)
        options, letter = shuffle_options(list(HEAD_POSE_CLASSES), gold,
                                          derive_seed(seed, img.id, "head_pose"))
        out.pairs.append(QAPair(f"{img.id}:head_pose", img, "multiple_choice",
                                HEAD_POSE_QUESTION.format(options=format_options(options)),
                                GoldLabel.letter(letter), options=options, category="head_pose"))
    return out


ADAPTERS: dict[str, Callable[..., Reformulated]] = {
    "agedb": agedb,
    "rafdb": rafdb,
    "emotionet": emotionet,
    "lfwa": lfwa,
    "celeba": celeba,
    "utkface": utkface,
    "affectnet": affectnet,
    "biwi": biwi,
}


def reformulate_file(dataset: str, labels: str | Path, seed: int,
                     images_root: str | Path | None = None, **options) -> Reformulated:
    if dataset not in ADAPTERS:
        raise ValueError(f"unknown dataset {dataset!r}; choose from {DATASETS}")
    labels = Path(labels)
    root = Path(images_root) if images_root is not None else None
    text = labels.read_text(encoding="utf-8")
    return ADAPTERS[dataset](text, seed, root=root, **options)
