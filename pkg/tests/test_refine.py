import json

import pytest

from raspref.backends.scripted import ScriptedBackend
from raspref.domain import AppendGuideline, EditSet, Problem, QualityWeights, RemoveExample
from raspref.errors import BackendUnavailable, ConfigError
from raspref.prompts import base_prompt, build_prompt
from raspref.refine import RefineConfig, RoundRecord, RunLog, refine

from conftest import make_trajectory

PROBLEM = Problem("q", "Tom has 3 apples and buys 4 more. How many apples?")


def consistency_scenario():
    """Without "Guideline A" the three samples answer 7, 7, 8; with it, all 7."""

    def solver(text, problem, i, seed):
        if "Guideline A" in text:
            return "#### 7"
        return "#### 8" if i == 2 else "#### 7"

    def editor(prompt, *rest):
        text = "Guideline B" if "Guideline A" in prompt.guidelines else "Guideline A"
        return EditSet((AppendGuideline(text),), rationale=f"add {text}")

    return ScriptedBackend(solver=solver, judge=lambda p, t: "Score: 0.5", editor=editor)


def test_rounds_zero_scores_once_and_stores(store):
    result = refine(PROBLEM, store, ScriptedBackend(), RefineConfig(rounds=0))
    assert len(result.history) == 1 and result.rounds == []
    assert result.prompt == build_prompt(base_prompt(), [])
    assert len(store) == 1 and store.records[0] == result.stored


def test_first_edit_accepted_second_rejected(store):
    cfg = RefineConfig(rounds=3, samples=3)
    result = refine(PROBLEM, store, consistency_scenario(), cfg)

    # Empty store: the retrieval weight drops out and the other three renormalize.
    q_before = (1 / 3 + 0.5 + 1.0) / 3
    q_after = (1.0 + 0.5 + 1.0) / 3
    initial, first, second = result.history
    assert initial.report.c_cons == pytest.approx(1 / 3)
    assert initial.report.q == pytest.approx(q_before, abs=1e-12)
    assert first.report.c_cons == 1.0 and first.report.q == pytest.approx(q_after, abs=1e-12)
    assert second.report.q == first.report.q

    assert len(result.rounds) == 2
    assert [r.accepted for r in result.rounds] == [True, False]
    assert result.prompt.guidelines == ("Guideline A",)
    assert result.prompt.revision == 1
    assert result.report.q == max(r.report.q for r in result.history)


def test_cold_start_still_runs_loop(store):
    result = refine(PROBLEM, store, ScriptedBackend(), RefineConfig(rounds=1))
    assert result.retrieved == []
    assert result.history[0].prompt_revision == 0
    assert result.prompt.examples == ()
    assert len(result.history) == 2
    assert len(store) == 1


def test_retrieved_examples_enter_prompt(store):
    for i in range(8):
        store.append(make_trajectory(i))
    problem = Problem("q", "Problem number 3 about item3 and widget3.")
    result = refine(problem, store, ScriptedBackend(), RefineConfig(rounds=0))
    assert len(result.retrieved) == 5
    assert result.retrieved[0].problem.id == "p3"
    assert result.prompt.examples[0].problem == "Problem number 3 about item3 and widget3."
    assert len(store) == 9


def test_stored_trajectory_is_best_verified_trace(store):
    def solver(text, problem, i, seed):
        return f"attempt {i} [good]\n#### 7" if i == 3 else f"attempt {i}\n#### 7"

    backend = ScriptedBackend(solver=solver, judge=lambda p, t: 0.9 if "[good]" in t else 0.2)
    result = refine(PROBLEM, store, backend, RefineConfig(rounds=0))
    assert result.stored.trace.startswith("attempt 3")
    assert result.stored.verifier == 0.9
    assert result.stored.consistency == 1.0
    assert result.stored.reward is None


def test_reference_answer_never_stored(store):
    refine(Problem("q", PROBLEM.statement, reference_answer="7"), store, ScriptedBackend(), RefineConfig(rounds=0))
    assert store.records[0].problem.reference_answer is None


def test_mid_loop_failure_returns_partial_and_writes_nothing(store):
    calls = []

    def editor(prompt, *rest):
        calls.append(1)
        if len(calls) == 2:
            raise BackendUnavailable("network down")
        return EditSet((AppendGuideline(f"g{len(calls)}"),))

    backend = ScriptedBackend(editor=editor, solver=lambda t, p, i, s: f"#### {t.count('g1')}{i % 2}")
    result = refine(PROBLEM, store, backend, RefineConfig(rounds=3, samples=2))
    assert result.partial and "network down" in result.error
    assert len(store) == 0 and result.stored is None


def test_failure_before_first_evaluation_propagates(store):
    def solver(*a):
        raise BackendUnavailable("down")

    with pytest.raises(BackendUnavailable):
        refine(PROBLEM, store, ScriptedBackend(solver=solver), RefineConfig(rounds=1))
    assert len(store) == 0


def test_unusable_edits_stop_loop(store):
    backend = ScriptedBackend(editor=lambda *a: EditSet((RemoveExample(0),)))
    result = refine(PROBLEM, store, backend, RefineConfig(rounds=3))
    assert len(result.history) == 1


def test_write_back_can_be_disabled(store):
    refine(PROBLEM, store, ScriptedBackend(), RefineConfig(rounds=1), write_back=False)
    assert len(store) == 0


def test_same_seed_runs_are_identical(tmp_path):
    from raspref.store import TrajectoryStore

    outs = []
    for name in ("a", "b"):
        s = TrajectoryStore.open(tmp_path / name)
        for i in range(6):
            s.append(make_trajectory(i))
        r = refine(PROBLEM, s, ScriptedBackend(), RefineConfig(rounds=3, seed=9))
        outs.append(json.dumps(r.to_dict()))
    assert outs[0] == outs[1]


def test_run_log_has_one_object_per_round(store, tmp_path):
    log = RunLog(tmp_path / "run")
    result = refine(PROBLEM, store, consistency_scenario(), RefineConfig(rounds=3, samples=3), run_log=log)
    lines = (tmp_path / "run" / "rounds.jsonl").read_text().splitlines()
    assert len(lines) == len(result.history)
    rows = [json.loads(l) for l in lines]
    assert all(r["problem_id"] == "q" for r in rows)
    assert [RoundRecord.from_dict(r) for r in rows] == result.history


def test_config_validation():
    with pytest.raises(ConfigError):
        RefineConfig(samples=1)
    with pytest.raises(ConfigError):
        RefineConfig(rounds=-1)
    cfg = RefineConfig()
    assert (cfg.rounds, cfg.samples, cfg.retrieval_k) == (3, 5, 5)
    assert cfg.weights == QualityWeights(0.25, 0.25, 0.25, 0.25)
