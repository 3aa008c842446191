"""Flat-file persistence: JSONL/JSON/CSV round-trips, atomicity, line-numbered
failure messages, and content hashing."""

import json

import pytest

from studentsim.errors import StorageError
from studentsim.profiles import sample_profile
from studentsim.scoring import ScoreRecord, Transcript
from studentsim import store


# -- JSONL ------------------------------------------------------------------------


def test_jsonl_round_trip(tmp_path):
    rows = [
        {"a": 1, "b": [1, 2, 3], "nested": {"x": None}},
        {"text": "héllo — unicode ✓", "f": 0.125},
    ]
    p = tmp_path / "rows.jsonl"
    store.save_jsonl(rows, p)
    assert store.load_jsonl(p) == rows


def test_jsonl_empty_round_trip(tmp_path):
    p = tmp_path / "empty.jsonl"
    store.save_jsonl([], p)
    assert p.read_text() == ""
    assert store.load_jsonl(p) == []


def test_jsonl_is_one_sorted_object_per_line(tmp_path):
    p = tmp_path / "rows.jsonl"
    store.save_jsonl([{"b": 2, "a": 1}], p)
    assert p.read_text() == '{"a": 1, "b": 2}\n'


def test_jsonl_blank_lines_are_skipped(tmp_path):
    p = tmp_path / "rows.jsonl"
    p.write_text('{"a": 1}\n\n{"a": 2}\n')
    assert store.load_jsonl(p) == [{"a": 1}, {"a": 2}]


def test_malformed_line_error_names_the_line(tmp_path):
    p = tmp_path / "rows.jsonl"
    p.write_text('{"ok": 1}\n{broken\n{"ok": 2}\n')
    with pytest.raises(StorageError, match=r"rows\.jsonl:2"):
        store.load_jsonl(p)


def test_truncated_final_line_is_an_error(tmp_path):
    p = tmp_path / "rows.jsonl"
    p.write_text('{"ok": 1}\n{"partial": ')
    with pytest.raises(StorageError, match=r"rows\.jsonl:2"):
        store.load_jsonl(p)


def test_missing_file_is_an_error(tmp_path):
    with pytest.raises(StorageError, match="no such file"):
        store.load_jsonl(tmp_path / "absent.jsonl")


# -- typed records ----------------------------------------------------------------


def test_profile_records_round_trip(tmp_path):
    from studentsim.profiles import StudentProfile

    profiles = [sample_profile(i) for i in range(20)]
    p = tmp_path / "profiles.jsonl"
    store.save_records(profiles, p)
    assert store.load_records(p, StudentProfile) == profiles


def test_score_records_round_trip(tmp_path):
    records = [
        ScoreRecord(
            profile_id=f"sp-{i:04x}",
            kind="profile" if i % 2 else "behavior",
            phase="initial",
            value=float(1 + i % 10),
            explanation=f"reason {i}",
            scorer="scorer-profile/v1",
            timestamp=0.0,
            repetition=1 + i % 2,
        )
        for i in range(100)
    ]
    p = tmp_path / "scores.jsonl"
    store.save_records(records, p)
    assert store.load_records(p, ScoreRecord) == records


def test_transcript_records_round_trip(tmp_path):
    transcripts = [
        Transcript(
            profile_id="sp-1",
            purpose="behavior",
            turns=[["dialogue", "hi"], ["student", "hello"]],
        )
    ]
    p = tmp_path / "transcripts.jsonl"
    store.save_records(transcripts, p)
    assert store.load_records(p, Transcript) == transcripts


def test_load_records_wrong_shape_names_the_line(tmp_path):
    p = tmp_path / "scores.jsonl"
    p.write_text('{"not": "a score record"}\n')
    with pytest.raises(StorageError, match=r"scores\.jsonl:1.*ScoreRecord"):
        store.load_records(p, ScoreRecord)


# -- JSON / CSV ---------------------------------------------------------------------


def test_json_round_trip(tmp_path):
    obj = {"z": [1.5, None], "a": {"nested": True}}
    p = tmp_path / "obj.json"
    store.save_json(obj, p)
    assert store.load_json(p) == obj
    assert json.loads(p.read_text()) == obj


def test_malformed_json_is_an_error(tmp_path):
    p = tmp_path / "obj.json"
    p.write_text("{broken")
    with pytest.raises(StorageError, match="malformed JSON"):
        store.load_json(p)


def test_csv_round_trip(tmp_path):
    rows = [
        {"id": "a", "kind": "profile", "phase": "initial", "value": "9.0"},
        {"id": "b", "kind": "behavior", "phase": "propagated", "value": "7.25"},
    ]
    p = tmp_path / "scores.csv"
    store.save_csv(rows, p, ["id", "kind", "phase", "value"])
    assert store.load_csv(p) == rows
    assert p.read_text().splitlines()[0] == "id,kind,phase,value"


def test_save_text_and_overwrite(tmp_path):
    p = tmp_path / "note.txt"
    store.save_text("first version, quite long\n", p)
    store.save_text("second\n", p)
    assert p.read_text() == "second\n"
    assert not (tmp_path / "note.txt.tmp").exists()


# -- hashing ------------------------------------------------------------------------


def test_file_hash_tracks_content(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    a.write_text("same bytes")
    b.write_text("same bytes")
    c.write_text("other bytes")
    assert store.file_hash(a) == store.file_hash(b)
    assert store.file_hash(a) != store.file_hash(c)
    with pytest.raises(StorageError):
        store.file_hash(tmp_path / "missing")
