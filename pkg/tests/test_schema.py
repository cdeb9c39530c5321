import io
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faceqa.schema import (
    DEFAULT_ATTRIBUTE_SCHEMA,
    AttributeSchema,
    FaceImageRef,
    GoldLabel,
    PersonAnnotation,
    QAPair,
    RecordError,
    SchemaError,
    read_records,
    write_records,
)
from faceqa.synthetic import image_refs, random_persons

from conftest import persons, qa_pairs

IMG = FaceImageRef("img1", "images/img1.jpg", "agedb")


def _qa(i, **kw):
    base = dict(id=f"q{i}", image=IMG, task="yes_no", question="Is it? Answer directly with Yes or No.",
                gold=GoldLabel.boolean(True))
    base.update(kw)
    return QAPair(**base)


def test_builtin_schema_shape():
    names = DEFAULT_ATTRIBUTE_SCHEMA.names
    assert names[0] == "position"
    assert names[-1] == "Jewelry"
    assert len(names) == len(set(names))
    assert len(names) == 37
    for spec in DEFAULT_ATTRIBUTE_SCHEMA.attributes[1:]:
        assert spec.allowed_values


def test_schema_lookup_is_case_insensitive():
    assert DEFAULT_ATTRIBUTE_SCHEMA.lookup("  hair   COLOR ").name == "Hair color"
    assert DEFAULT_ATTRIBUTE_SCHEMA.lookup("tail length") is None


def test_schema_file_round_trip(tmp_path):
    path = tmp_path / "schema.json"
    path.write_text(json.dumps(DEFAULT_ATTRIBUTE_SCHEMA.to_dict()))
    assert AttributeSchema.load(path) == DEFAULT_ATTRIBUTE_SCHEMA


def test_schema_rejects_duplicate_names():
    spec = DEFAULT_ATTRIBUTE_SCHEMA.attributes[1]
    with pytest.raises(SchemaError):
        AttributeSchema((spec, spec))


def test_empty_write_gives_empty_file(tmp_path):
    path = tmp_path / "empty.recs"
    assert write_records([], path) == 0
    assert path.read_text() == ""
    assert read_records(path, "qa") == []


def test_three_pairs_round_trip(tmp_path):
    recs = [_qa(i) for i in range(3)]
    path = tmp_path / "qa.recs"
    assert write_records(recs, path) == 3
    assert len(path.read_text().splitlines()) == 3
    assert read_records(path, "qa") == recs


def test_thousand_random_persons_round_trip():
    rng = random.Random(7)
    recs = []
    for img in image_refs(1000):
        recs.extend(random_persons(rng, img))
        if len(recs) >= 1000:
            break
    recs = recs[:1000]
    buf = io.StringIO()
    write_records(recs, buf)
    back = read_records(io.StringIO(buf.getvalue()), "person")
    assert len(back) == 1000
    for a, b in zip(recs, back):
        assert a.image == b.image and a.person_index == b.person_index
        assert a.position == b.position and a.caption == b.caption
        assert a.attributes == b.attributes
        assert list(a.attributes) == list(b.attributes)


@given(st.lists(qa_pairs(), max_size=10, unique_by=lambda q: q.id))
@settings(max_examples=100, deadline=None)
def test_qa_round_trip_property(recs):
    buf = io.StringIO()
    write_records(recs, buf)
    assert read_records(io.StringIO(buf.getvalue()), "qa") == recs


@given(st.lists(persons(image=IMG), max_size=8, unique_by=lambda p: p.person_index))
@settings(max_examples=100, deadline=None)
def test_person_round_trip_property(recs):
    buf = io.StringIO()
    write_records(recs, buf)
    assert read_records(io.StringIO(buf.getvalue()), "person") == recs


def test_options_on_age_task_names_options():
    bad = {"id": "q", "image": IMG.to_dict(), "task": "age", "question": "How old?",
           "gold": {"variant": "number", "value": 30}, "options": [["A", "x"], ["B", "y"]]}
    with pytest.raises(RecordError) as err:
        read_records(io.StringIO(json.dumps(bad) + "\n"), "qa")
    assert err.value.field == "options"
    assert err.value.line == 1
    assert "options" in str(err.value)


def test_truncated_final_line_reports_its_number(tmp_path):
    path = tmp_path / "qa.recs"
    write_records([_qa(i) for i in range(4)], path)
    text = path.read_text()
    path.write_text(text[: len(text) - 15])
    with pytest.raises(RecordError) as err:
        read_records(path, "qa")
    assert err.value.line == 4


def test_write_rejects_invalid_record_with_index():
    recs = [_qa(0), _qa(1, task="age", gold=GoldLabel.number(0))]
    with pytest.raises(RecordError) as err:
        write_records(recs, io.StringIO())
    assert err.value.index == 1
    assert err.value.field == "gold"


def test_duplicate_ids_rejected():
    with pytest.raises(RecordError):
        write_records([_qa(0), _qa(0)], io.StringIO())


@pytest.mark.parametrize("kw, field", [
    (dict(task="multiple_choice"), "options"),
    (dict(task="multiple_choice", options=(("A", "x"), ("C", "y")), gold=GoldLabel.letter("A")), "options"),
    (dict(task="multiple_choice", options=(("A", "x"), ("B", "x")), gold=GoldLabel.letter("A")), "options"),
    (dict(task="multiple_choice", options=(("A", "x"), ("B", "y")), gold=GoldLabel.letter("C")), "gold"),
    (dict(task="age", gold=GoldLabel.number(101)), "gold"),
    (dict(task="age", gold=GoldLabel.boolean(True)), "gold"),
    (dict(task="riddle"), "task"),
    (dict(id=""), "id"),
])
def test_qa_invariants(kw, field):
    with pytest.raises(SchemaError) as err:
        _qa(0, **kw).validate()
    assert err.value.field == field


def test_unknown_source_dataset_rejected():
    with pytest.raises(SchemaError):
        FaceImageRef("x", "u", "imagenet").validate()


def test_person_attribute_names_checked():
    p = PersonAnnotation(IMG, 0, "", "A face.", {"Tail length": "long"})
    with pytest.raises(SchemaError):
        p.validate()


def test_person_caption_required():
    with pytest.raises(SchemaError):
        PersonAnnotation(IMG, 0, "", "  ", {"gender": "male"}).validate()


def test_strict_rejects_and_lenient_preserves_unknown_fields():
    d = _qa(0).to_dict()
    d["annotator_note"] = "checked"
    line = json.dumps(d) + "\n"
    with pytest.raises(RecordError):
        read_records(io.StringIO(line), "qa", strict=True)
    (rec,) = read_records(io.StringIO(line), "qa", strict=False)
    assert rec.extra == {"annotator_note": "checked"}
    buf = io.StringIO()
    write_records([rec], buf)
    assert json.loads(buf.getvalue())["annotator_note"] == "checked"


def test_malformed_json_located():
    src = io.StringIO(json.dumps(_qa(0).to_dict()) + "\n{not json\n")
    with pytest.raises(RecordError) as err:
        read_records(src, "qa")
    assert err.value.line == 2


def test_wrong_kind_field_is_located():
    src = io.StringIO(json.dumps(IMG.to_dict()) + "\n")
    with pytest.raises(RecordError) as err:
        read_records(src, "qa")
    assert err.value.line == 1


def test_stable_field_order():
    line = json.dumps(_qa(0).to_dict())
    keys = list(json.loads(line))
    assert keys[:5] == ["id", "image", "task", "question", "gold"]
