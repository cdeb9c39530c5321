import json
import os

import pytest

from faceqa.cli import RunConfig, UsageError, build_parser, dispatch, resolve_config
from faceqa.manifest import StageSpec, default_stage_spec
from faceqa.mix import MixSource, MixSpec
from faceqa.schema import ZERO_SHOT_VOCAB, FaceImageRef, ZeroShotAnnotation, read_records, write_records
from faceqa.synthetic import image_refs, write_rafdb_labels


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for key in list(os.environ):
        if key.startswith("FACEQA_"):
            monkeypatch.delenv(key)
    write_records(image_refs(30), "images.recs")
    return tmp_path


def run(*argv):
    return dispatch([str(a) for a in argv])


def _pipeline(concurrency=4):
    assert run("annotate", "--in", "images.recs", "--out", "annos.recs", "--failures", "fail.recs",
               "--raw", "raw.recs", "--endpoint", "mock://annotate", "--concurrency", concurrency,
               "--retries", 2) == 0
    assert run("clean", "--in", "raw.recs", "--out", "clean.recs", "--report", "drops.recs") == 0
    assert run("genqa", "--annos", "clean.recs", "--seed", 5, "--multi-face", "auto",
               "--out", "stage2.recs") == 0
    assert run("eval", "--qa", "stage2.recs", "--endpoint", "mock://gold", "--out", "evals.recs",
               "--concurrency", concurrency) == 0
    assert run("score", "--in", "evals.recs", "--out", "report.json") == 0


def test_full_pipeline(workdir, capsys):
    _pipeline()
    report = json.loads((workdir / "report.json").read_text())
    assert report["overall"]["accuracy"] == 1.0
    assert (workdir / "annos.recs").read_text() == (workdir / "clean.recs").read_text()
    assert run("report", "--in", "report.json", "--layout", "table2") == 0
    out = capsys.readouterr().out
    assert "Attribute (Acc)" in out and "100.0" in out


def test_pipeline_idempotent_and_concurrency_independent(workdir):
    _pipeline(concurrency=1)
    names = ("annos.recs", "raw.recs", "fail.recs", "clean.recs", "drops.recs", "stage2.recs",
             "evals.recs", "report.json")
    first = {n: (workdir / n).read_bytes() for n in names}
    _pipeline(concurrency=16)
    assert {n: (workdir / n).read_bytes() for n in names} == first


def test_no_undeclared_outputs(workdir):
    before = set(os.listdir(workdir))
    _pipeline()
    created = set(os.listdir(workdir)) - before
    assert created == {"annos.recs", "fail.recs", "raw.recs", "clean.recs", "drops.recs",
                       "stage2.recs", "evals.recs", "report.json"}


def test_score_missing_file(workdir, caplog):
    assert run("score", "--in", "missing.recs", "--out", "r.json") == 1
    assert "missing.recs" in caplog.text


def test_unknown_subcommand(workdir, capsys):
    assert run("bogus") == 1
    assert "usage" in capsys.readouterr().err


def test_no_subcommand(workdir):
    assert run() == 1


def test_help_per_subcommand(workdir, capsys):
    for sub in ("annotate", "clean", "genqa", "reformulate", "zeroshot", "mix", "manifest", "eval",
                "score", "report"):
        assert run(sub, "--help") == 0
        assert "--seed" in capsys.readouterr().out


def test_generators_require_seed(workdir):
    write_rafdb_labels("raf.txt", 5)
    assert run("reformulate", "--dataset", "rafdb", "--labels", "raf.txt", "--out", "q.recs") == 1
    assert not (workdir / "q.recs").exists()
    assert run("reformulate", "--dataset", "rafdb", "--labels", "raf.txt", "--out", "q.recs",
               "--seed", 1) == 0
    assert len(read_records("q.recs", "qa")) == 5


def test_seed_flag_before_or_after_subcommand(workdir):
    write_rafdb_labels("raf.txt", 5)
    run("--seed", 3, "reformulate", "--dataset", "rafdb", "--labels", "raf.txt", "--out", "a.recs")
    run("reformulate", "--dataset", "rafdb", "--labels", "raf.txt", "--out", "b.recs", "--seed", 3)
    assert (workdir / "a.recs").read_bytes() == (workdir / "b.recs").read_bytes()


def test_manifest_stage2_matches_default(workdir):
    assert run("manifest", "--stage", 2, "--out", "stage2.man") == 0
    (spec,) = read_records("stage2.man", "stage")
    assert spec == default_stage_spec(2)
    assert run("manifest", "--stage", 1, "--scale", "1/1000", "--out", "s1.man") == 0
    (s1,) = read_records("s1.man", "stage")
    assert s1.data_mix.counts() == {"face_captions": 150, "general_pairs": 660}


def test_manifest_bad_stage(workdir):
    assert run("manifest", "--stage", 4) == 1


def test_mix_command(workdir):
    for role, n in (("face_captions", 200), ("general_pairs", 700)):
        with open(f"{role}.recs", "w") as f:
            for i in range(n):
                f.write(json.dumps({"role": role, "i": i}) + "\n")
    spec = MixSpec("stage1", (MixSource("face_captions", 150_000, "face_captions.recs"),
                              MixSource("general_pairs", 660_000, "general_pairs.recs")), 0, 810_000)
    (workdir / "stage1.mix").write_text(json.dumps(spec.to_dict()))
    assert run("mix", "--spec", "stage1.mix", "--out", "mixed.recs", "--manifest", "mix.man",
               "--scale", "1/1000") == 0
    man = json.loads((workdir / "mix.man").read_text())
    assert man["total"] == 810
    assert len((workdir / "mixed.recs").read_text().splitlines()) == 810
    assert run("mix", "--spec", "stage1.mix", "--out", "m2.recs", "--manifest", "m2.man") == 1


def test_zeroshot_command(workdir):
    items = [ZeroShotAnnotation(FaceImageRef(f"z{i}", "u", "zero_shot"), cat, ZERO_SHOT_VOCAB[cat][0])
             for i, cat in enumerate(sorted(ZERO_SHOT_VOCAB) * 75)]
    write_records(items, "zs.recs")
    (workdir / "feats.toml").write_text('[eye_shape]\nphoenix = "Phoenix eyes tilt up sharply."\n')
    assert run("zeroshot", "--annos", "zs.recs", "--descriptions", "feats.toml", "--out", "zsq.recs",
               "--seed", 0) == 0
    pairs = read_records("zsq.recs", "qa")
    assert len(pairs) == 760
    assert any("Phoenix eyes tilt up sharply." in q.question for q in pairs)


def test_eval_empty_endpoint_scores_zero(workdir):
    _pipeline()
    assert run("eval", "--qa", "stage2.recs", "--endpoint", "mock://empty", "--out", "e.recs") == 0
    assert run("score", "--in", "e.recs", "--out", "r.json") == 0
    report = json.loads((workdir / "r.json").read_text())
    assert report["overall"]["parse_rate"] == 0.0


def test_endpoint_failure_exit_2_with_partial_flush(workdir):
    _pipeline()
    code = run("eval", "--qa", "stage2.recs", "--endpoint", "http://127.0.0.1:9/none",
               "--out", "e.recs", "--retries", 0, "--concurrency", 1)
    assert code == 2
    assert len(read_records("e.recs", "eval")) == 20  # flushed up to the abort threshold


def test_invalid_record_exit_1(workdir):
    (workdir / "bad.recs").write_text('{"id": "x"}\n')
    assert run("eval", "--qa", "bad.recs", "--endpoint", "mock://gold", "--out", "e.recs") == 1


def test_lenient_mode_accepts_unknown_fields(workdir):
    d = FaceImageRef("a", "u", "other").to_dict() | {"note": "x"}
    (workdir / "imgs.recs").write_text(json.dumps(d) + "\n")
    args = ("annotate", "--in", "imgs.recs", "--out", "a.recs", "--failures", "f.recs",
            "--endpoint", "mock://annotate")
    assert run(*args) == 1
    assert run(*args, "--lenient") == 0


def test_config_precedence(workdir, monkeypatch):
    (workdir / "cfg.toml").write_text('seed = 1\nconcurrency = 2\nendpoint = "mock://gold"\n')
    parser = build_parser()
    args = parser.parse_args(["score", "--in", "x", "--out", "y", "--config", "cfg.toml"])
    cfg = resolve_config(args, env={})
    assert (cfg.seed, cfg.concurrency, cfg.endpoint) == (1, 2, "mock://gold")
    cfg = resolve_config(args, env={"FACEQA_SEED": "7", "FACEQA_CONCURRENCY": "3"})
    assert (cfg.seed, cfg.concurrency) == (7, 3)
    args = parser.parse_args(["--seed", "9", "score", "--in", "x", "--out", "y", "--config", "cfg.toml"])
    assert resolve_config(args, env={"FACEQA_SEED": "7"}).seed == 9


def test_config_json_and_unknown_keys(workdir):
    (workdir / "cfg.json").write_text(json.dumps({"retries": 5}))
    args = build_parser().parse_args(["score", "--in", "x", "--out", "y", "--config", "cfg.json"])
    assert resolve_config(args, env={}).retries == 5
    (workdir / "bad.json").write_text(json.dumps({"colour": "red"}))
    args = build_parser().parse_args(["score", "--in", "x", "--out", "y", "--config", "bad.json"])
    with pytest.raises(UsageError):
        resolve_config(args, env={})


def test_concurrency_must_be_positive():
    with pytest.raises(UsageError):
        RunConfig(concurrency=0)


def test_report_layouts(workdir, capsys):
    _pipeline()
    for layout in ("table2", "table3", "parse_fig"):
        assert run("report", "--in", "report.json", "--layout", layout, "--summary", "s.json") == 0
        assert json.loads((workdir / "s.json").read_text())["layout"] == layout
    assert run("report", "--in", "evals.recs") == 1
