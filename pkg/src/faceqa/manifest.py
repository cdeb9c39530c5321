"""Three-stage training recipe as validated manifests. Nothing here trains a model."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .mix import MixSource, MixSpec
from .schema import Record, SchemaError, _require, register_kind

COMPONENTS = ("vision_encoder", "projector", "language_model")

STAGE_RANKS = {1: None, 2: 16, 3: 8}

STAGE_MIXES: dict[int, tuple[tuple[str, int | None], ...]] = {
    1: (("face_captions", 150_000), ("general_pairs", 660_000)),
    2: (("face_qa", 4_750_000), ("general_instruct", 660_000), ("text_only", 140_000)),
    # reformulated face QA has no published size: take everything available
    3: (("reformulated_face_qa", None), ("general_instruct", 660_000), ("text_only", 140_000)),
}


@dataclass(frozen=True)
class StageSpec(Record):
    stage: int
    trainable: frozenset[str]
    adaptation_rank: int | None  # None: full update of the trainable parts, no low-rank adapters
    data_mix: MixSpec
    adapter_targets: tuple[str, ...] = ()
    hyperparameters: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    kind = "stage"

    @property
    def adaptation(self) -> str:
        return "none" if self.adaptation_rank is None else f"low_rank({self.adaptation_rank})"

    def validate(self) -> None:
        problems = validate_manifest(self)
        if problems:
            raise SchemaError("stage", "; ".join(problems))

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["trainable"] = [c for c in COMPONENTS if c in self.trainable] + sorted(
            set(self.trainable) - set(COMPONENTS))
        d["adaptation"] = ({"kind": "none"} if self.adaptation_rank is None
                           else {"kind": "low_rank", "rank": self.adaptation_rank})
        del d["adaptation_rank"]
        return {k: d[k] for k in ("stage", "trainable", "adaptation", "data_mix",
                                  "adapter_targets", "hyperparameters")} | {
            k: v for k, v in d.items() if k not in ("stage", "trainable", "adaptation", "data_mix",
                                                     "adapter_targets", "hyperparameters")}

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True) -> "StageSpec":
        d = dict(d)
        adaptation = d.pop("adaptation", {"kind": "none"})
        known, unknown = cls._split(d, strict)
        if adaptation.get("kind") == "low_rank":
            rank = adaptation.get("rank")
        elif adaptation.get("kind") == "none":
            rank = None
        else:
            raise SchemaError("adaptation", f"unknown kind {adaptation.get('kind')!r}")
        return cls(
            stage=_require(known, "stage"),
            trainable=frozenset(_require(known, "trainable")),
            adaptation_rank=rank,
            data_mix=MixSpec.from_dict(_require(known, "data_mix"), strict),
            adapter_targets=tuple(known.get("adapter_targets", ())),
            hyperparameters=dict(known.get("hyperparameters", {})),
            extra=unknown,
        )


def default_stage_spec(stage: int, scale: Fraction | str | float = 1, seed: int = 0) -> StageSpec:
    if stage not in STAGE_RANKS:
        raise ValueError(f"stage must be 1, 2 or 3, got {stage!r}")
    total = None
    if all(c is not None for _, c in STAGE_MIXES[stage]):
        total = sum(c for _, c in STAGE_MIXES[stage])
    mix = MixSpec(f"stage{stage}", tuple(MixSource(r, c) for r, c in STAGE_MIXES[stage]), seed,
                  total)
    if Fraction(scale) != 1:
        mix = mix.scaled(scale)
    trainable = frozenset({"projector"}) if stage == 1 else frozenset({"projector", "language_model"})
    return StageSpec(stage, trainable, STAGE_RANKS[stage], mix)


def validate_manifest(spec: StageSpec) -> list[str]:
    """Every violated stage rule, as readable strings; empty means valid."""
    problems: list[str] = []
    if spec.stage not in STAGE_RANKS:
        return [f"stage must be 1, 2 or 3, got {spec.stage!r}"]
    unknown = set(spec.trainable) - set(COMPONENTS)
    if unknown:
        problems.append(f"unknown trainable components {sorted(unknown)}")
    if spec.stage == 1:
        if set(spec.trainable) != {"projector"}:
            frozen = sorted(set(spec.trainable) - {"projector"})
            problems.append(f"stage 1 trains the projector only; vision_encoder and language_model "
                            f"stay frozen (found trainable: {frozen or 'none'}"
                            f"{'' if 'projector' in spec.trainable else ', projector missing'})")
        if spec.adaptation_rank is not None:
            problems.append(f"stage 1 uses no adaptation, got {spec.adaptation}")
    else:
        missing = {"projector", "language_model"} - set(spec.trainable)
        if missing:
            problems.append(f"stage {spec.stage} must train projector and language_model "
                            f"(missing {sorted(missing)})")
        expected = STAGE_RANKS[spec.stage]
        if spec.adaptation_rank != expected:
            problems.append(f"stage {spec.stage} expects low_rank({expected}), got {spec.adaptation}")
    if spec.adaptation_rank is not None and (not isinstance(spec.adaptation_rank, int)
                                             or spec.adaptation_rank <= 0):
        problems.append(f"adaptation rank must be a positive integer, got {spec.adaptation_rank!r}")
    roles = [s.role for s in spec.data_mix.sources]
    expected_roles = [r for r, _ in STAGE_MIXES[spec.stage]]
    if sorted(roles) != sorted(expected_roles):
        problems.append(f"stage {spec.stage} mix roles {roles} differ from {expected_roles}")
    try:
        spec.data_mix.validate()
    except SchemaError as e:
        problems.append(f"data_mix {e}")
    return problems


register_kind(StageSpec)
