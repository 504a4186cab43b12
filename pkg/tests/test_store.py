import json
import logging

import pytest

from raspref.backends.scripted import hash_embedding
from raspref.errors import DimensionMismatch, StorageFailure
from raspref.store import TrajectoryStore

from conftest import make_trajectory


def test_single_record_roundtrip(store):
    t = make_trajectory(1)
    store.append(t)
    assert len(store) == 1
    assert TrajectoryStore.open(store.path).records == [t]


def test_file_format_is_one_object_per_line(store):
    store.append(make_trajectory(1))
    store.append(make_trajectory(2, consistency=0.5))
    raw = store.path.read_bytes().decode("utf-8")
    lines = raw.split("\n")
    assert lines[-1] == "" and len(lines) == 3
    first = json.loads(lines[0])
    assert set(first) == {"problem", "prompt", "trace", "reward", "consistency", "verifier", "embedding"}
    assert all(isinstance(x, float) for x in first["embedding"])


def test_two_hundred_records_indexed(store):
    for i in range(200):
        store.append(make_trajectory(i))
    assert store.index_size == 200
    query = hash_embedding("Problem number 17 about item17 and widget17.")
    assert len(store.retrieve(query, 5)) == 5


def test_wrong_dimension_rejected_and_state_unchanged(store):
    store.append(make_trajectory(1))
    before = store.path.read_bytes()
    with pytest.raises(DimensionMismatch):
        store.append(make_trajectory(2, dim=64))
    assert len(store) == 1
    assert store.path.read_bytes() == before
    assert TrajectoryStore.open(store.path).records == store.records


def test_empty_store_retrieves_nothing(store):
    assert store.retrieve(hash_embedding("anything"), 5) == []


def test_self_match_ranks_first(store):
    for i in range(30):
        store.append(make_trajectory(i))
    target = make_trajectory(99, statement="A completely different question about trains and tunnels.")
    store.append(target)
    assert store.retrieve(target.embedding, 5)[0] == target


def test_records_without_embedding_are_kept_but_not_indexed(store):
    t = make_trajectory(1)
    from dataclasses import replace

    store.append(replace(t, embedding=None))
    store.append(make_trajectory(2))
    assert len(store) == 2 and store.index_size == 1
    assert len(store.retrieve(make_trajectory(2).embedding, 5)) == 1


def test_truncated_final_line_skipped_with_warning(store, caplog):
    records = [make_trajectory(i) for i in range(3)]
    for r in records:
        store.append(r)
    with open(store.path, "ab") as fh:
        fh.write(b'{"problem": {"id": "torn", "stat')
    with caplog.at_level(logging.WARNING):
        reopened = TrajectoryStore.open(store.path)
    assert reopened.records == records
    assert "truncated" in caplog.text
    # The writer drops the torn tail before appending.
    extra = make_trajectory(7)
    reopened.append(extra)
    assert TrajectoryStore.open(store.path).records == records + [extra]


def test_final_line_without_newline_is_kept_and_appendable(store):
    store.append(make_trajectory(1))
    store.path.write_bytes(store.path.read_bytes().rstrip(b"\n"))
    reopened = TrajectoryStore.open(store.path)
    assert len(reopened) == 1
    reopened.append(make_trajectory(2))
    assert len(TrajectoryStore.open(store.path)) == 2


def test_corrupt_middle_line_is_an_error(store):
    store.append(make_trajectory(1))
    with open(store.path, "ab") as fh:
        fh.write(b"not json\n")
    store_text = store.path.read_bytes() + json.dumps(make_trajectory(2).to_dict()).encode() + b"\n"
    store.path.write_bytes(store_text)
    with pytest.raises(StorageFailure):
        TrajectoryStore.open(store.path)


def test_duplicate_problem_ids_allowed(store):
    store.append(make_trajectory(1))
    store.append(make_trajectory(1))
    assert len(store) == 2
    assert len(store.retrieve(make_trajectory(1).embedding, 5)) == 2


def test_min_verifier_score_filter(store):
    store.append(make_trajectory(1, verifier=0.2))
    store.append(make_trajectory(2, verifier=0.9))
    store.append(make_trajectory(3))
    got = store.retrieve(make_trajectory(1).embedding, 5, min_verifier_score=0.5)
    assert [t.problem.id for t in got] == ["p2"]
    assert store.retrieve(make_trajectory(1).embedding, 5, min_verifier_score=0.95) == []


def test_readers_see_snapshot_until_refresh(store):
    reader = TrajectoryStore.open(store.path)
    store.append(make_trajectory(1))
    assert len(reader) == 0
    reader.refresh()
    assert len(reader) == 1


def test_path_may_name_the_file_directly(tmp_path):
    s = TrajectoryStore.open(tmp_path / "custom.jsonl")
    s.append(make_trajectory(1))
    assert (tmp_path / "custom.jsonl").exists()
