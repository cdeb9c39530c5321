"""Seeded data-mix assembly from line-delimited inventories."""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import IO, Sequence

from .schema import Record, SchemaError, register_kind, _require
from .seeding import rng_for

ALL = "all"


@dataclass(frozen=True)
class MixSource(Record):
    role: str
    count: int | None  # None: every record of the inventory
    path: str = ""
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    kind = "mix_source"

    def validate(self) -> None:
        if not self.role:
            raise SchemaError("role", "must be non-empty")
        if self.count is not None and (not isinstance(self.count, int) or self.count <= 0):
            raise SchemaError("count", f"target count must be > 0, got {self.count!r}")

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["count"] = ALL if self.count is None else self.count
        if not self.path:
            d.pop("path")
        return d

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True) -> "MixSource":
        known, unknown = cls._split(d, strict)
        count = _require(known, "count")
        return cls(_require(known, "role"), None if count == ALL else count,
                   known.get("path", ""), unknown)


@dataclass(frozen=True)
class MixSpec(Record):
    name: str
    sources: tuple[MixSource, ...]
    seed: int
    total: int | None = None
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    kind = "mix"

    def validate(self) -> None:
        roles = set()
        for s in self.sources:
            s.validate()
            if s.role in roles:
                raise SchemaError("sources", f"duplicate role {s.role!r}")
            roles.add(s.role)
        counts = [s.count for s in self.sources]
        if self.total is not None:
            if any(c is None for c in counts):
                raise SchemaError("total", "cannot declare a total with 'all' sources")
            if sum(counts) != self.total:
                raise SchemaError("total", f"source counts sum to {sum(counts)}, declared {self.total}")

    def scaled(self, scale: Fraction | float | str) -> "MixSpec":
        """Multiply every fixed count by ``scale`` (nearest integer, at least 1)."""
        scale = Fraction(scale)
        sources = tuple(
            MixSource(s.role, None if s.count is None else max(1, math.floor(s.count * scale + Fraction(1, 2))),
                      s.path)
            for s in self.sources
        )
        total = None
        if self.total is not None:
            total = sum(s.count for s in sources)
        return MixSpec(self.name, sources, self.seed, total, self.extra)

    def counts(self) -> dict[str, int | None]:
        return {s.role: s.count for s in self.sources}

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True) -> "MixSpec":
        known, unknown = cls._split(d, strict)
        sources = tuple(MixSource.from_dict(s, strict) for s in _require(known, "sources"))
        return cls(_require(known, "name"), sources, _require(known, "seed"),
                   known.get("total"), unknown)

    @classmethod
    def load(cls, path: str | Path) -> "MixSpec":
        path = Path(path)
        spec = cls.from_dict(json.loads(path.read_text(encoding="utf-8")))
        # inventory paths are relative to the spec file
        sources = tuple(
            MixSource(s.role, s.count, str(path.parent / s.path) if s.path and not Path(s.path).is_absolute() else s.path)
            for s in spec.sources
        )
        spec = cls(spec.name, sources, spec.seed, spec.total, spec.extra)
        spec.validate()
        return spec


def _count_lines(path: Path) -> int:
    with open(path, encoding="utf-8") as f:
        return sum(1 for line in f if line.strip())


def _pick_lines(path: Path, wanted: set[int]) -> dict[int, str]:
    out = {}
    with open(path, encoding="utf-8") as f:
        i = 0
        for line in f:
            if not line.strip():
                continue
            if i in wanted:
                out[i] = line.rstrip("\n")
            i += 1
    return out


def _balanced_sample(path: Path, k: int, key: str, rng) -> list[int]:
    groups: dict[str, list[int]] = defaultdict(list)
    with open(path, encoding="utf-8") as f:
        i = 0
        for line in f:
            if not line.strip():
                continue
            groups[str(json.loads(line).get(key))].append(i)
            i += 1
    names = sorted(groups)
    quota = {g: 0 for g in names}
    remaining = k
    open_groups = [g for g in names if groups[g]]
    while remaining and open_groups:
        share = max(1, remaining // len(open_groups))
        for g in list(open_groups):
            take = min(share, len(groups[g]) - quota[g], remaining)
            quota[g] += take
            remaining -= take
            if quota[g] == len(groups[g]):
                open_groups.remove(g)
            if not remaining:
                break
    picked = []
    for g in names:
        picked += rng.sample(groups[g], quota[g])
    return picked


def assemble_mix(spec: MixSpec, inventories: dict[str, str | Path] | None = None,
                 out: str | Path | IO[str] | None = None, scale: Fraction | str | float = 1,
                 balance_key: str | None = None) -> dict:
    """Sample each source without replacement, interleave with a seeded shuffle, write lines.

    ``inventories`` maps role to a record file and overrides paths stored in the
    spec. Records are copied verbatim. Returns the manifest dict.
    """
    inventories = dict(inventories or {})
    spec = spec.scaled(scale) if Fraction(scale) != 1 else spec
    spec.validate()
    picks: list[tuple[int, int]] = []  # (source position, line index)
    lines: dict[int, dict[int, str]] = {}
    rows = []
    for pos, src in enumerate(spec.sources):
        path = Path(inventories.get(src.role) or src.path)
        if not str(path) or not path.is_file():
            raise ValueError(f"source {src.role!r}: inventory file {str(path)!r} not found")
        available = _count_lines(path)
        k = available if src.count is None else src.count
        if k > available:
            raise ValueError(f"source {src.role!r}: inventory holds {available} records, "
                             f"{k} requested; pass a smaller scale")
        rng = rng_for(spec.seed, spec.name, src.role)
        if balance_key:
            chosen = _balanced_sample(path, k, balance_key, rng)
        else:
            chosen = rng.sample(range(available), k)
        lines[pos] = _pick_lines(path, set(chosen))
        picks += [(pos, i) for i in sorted(chosen)]
        rows.append({"role": src.role, "path": str(path),
                     "requested": ALL if src.count is None else src.count,
                     "available": available, "drawn": k})
    rng_for(spec.seed, spec.name, "interleave").shuffle(picks)
    total = len(picks)
    for r in rows:
        r["proportion"] = r["drawn"] / total if total else 0.0

    if out is not None:
        if isinstance(out, (str, Path)):
            with open(out, "w", encoding="utf-8", newline="\n") as f:
                _write_picks(f, picks, lines)
        else:
            _write_picks(out, picks, lines)
    return {
        "name": spec.name,
        "seed": spec.seed,
        "scale": str(Fraction(scale)),
        "balance_key": balance_key,
        "total": total,
        "sources": rows,
    }


def _write_picks(f: IO[str], picks: Sequence[tuple[int, int]], lines) -> None:
    for pos, i in picks:
        f.write(lines[pos][i])
        f.write("\n")


register_kind(MixSource)
register_kind(MixSpec)
