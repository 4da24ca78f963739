"""Hierarchical decision scheme: routing, gating, training, persistence."""

import numpy as np
import pytest

from diffsentry.detector import CdfConfig
from diffsentry.ensembles.cart import Node
from diffsentry.ensembles.model import TreeEnsembleModel
from diffsentry.errors import ClassMissing, IncompleteModel, SchemaMismatch
from diffsentry.features import Task, schema_hash, task_specs
from diffsentry.pipeline import (
    DISTURBANCE_CLASS,
    FAULT_CLASS,
    PipelineModel,
    StreamingClassifier,
    TrainConfig,
    decide,
    load_pipeline,
    save_pipeline,
    train_pipeline,
)
from diffsentry.sampling import (
    DisturbanceType,
    FaultType,
    SamplingSpec,
    Unit,
)
from diffsentry.wavegen.disturbances import generate_disturbance
from diffsentry.wavegen.faults import FaultSpec, UNIT_PRESETS, simulate_internal_fault

SPEC = SamplingSpec()
SPC = SPEC.samples_per_cycle

_TASK_CLASSES = {
    Task.DETECT_FAULT: [DISTURBANCE_CLASS, FAULT_CLASS],
    Task.LOCATE_UNIT: sorted(u.value for u in Unit),
    Task.IDENTIFY_SERIES: sorted(ft.value for ft in FaultType),
    Task.IDENTIFY_EXCITING: sorted(ft.value for ft in FaultType),
    Task.IDENTIFY_PT: sorted(ft.value for ft in FaultType),
    Task.IDENTIFY_DISTURBANCE: sorted(d.value for d in DisturbanceType),
}


def _stub(task: Task, label: str) -> TreeEnsembleModel:
    classes = _TASK_CLASSES[task]
    probs = [0.0] * len(classes)
    probs[classes.index(label)] = 1.0
    return TreeEnsembleModel(
        kind="CART",
        trees=[Node(value=probs, n_samples=1)],
        codebook=classes,
        config={},
        n_features=len(task_specs(task)) * 3,
        schema_hash=schema_hash(task),
    )


class _Poisoned(TreeEnsembleModel):
    def predict_proba(self, X):
        raise AssertionError("this stage must not be invoked")


def _poisoned(task: Task) -> TreeEnsembleModel:
    classes = _TASK_CLASSES[task]
    return _Poisoned(
        kind="CART",
        trees=[Node(value=[1.0] + [0.0] * (len(classes) - 1), n_samples=1)],
        codebook=classes,
        config={},
        n_features=len(task_specs(task)) * 3,
        schema_hash=schema_hash(task),
    )


def _stub_pipeline(overrides) -> PipelineModel:
    slots = {task: _poisoned(task) for task in Task}
    slots.update(overrides)
    return PipelineModel(detector_cfg=CdfConfig(), slots=slots)


def _steady():
    n = 8 * SPC
    theta = 2 * np.pi * np.arange(n)[:, None] / SPC
    offs = np.array([0.0, -2 * np.pi / 3, 2 * np.pi / 3])
    return 0.9 * np.sin(theta + offs)


def _fault_wave(rf=0.01):
    fault = FaultSpec(fault_type=FaultType.WA_G, unit=Unit.PT,
                      resistance_ohm=rf, pct_winding=80.0)
    return simulate_internal_fault(UNIT_PRESETS[Unit.PT], fault, SPEC,
                                   duration_cycles=8, inception_index=2 * SPC)


def test_no_event_short_circuits_every_classifier():
    model = _stub_pipeline({})  # all six stages poisoned
    decision = decide(_steady(), model)
    assert decision.verdict == "NoEvent"
    assert not decision.detected
    assert decision.fault_unit is None
    assert decision.stage_probabilities == {}


def test_fault_route_trips_and_never_touches_disturbance_stage():
    model = _stub_pipeline({
        Task.DETECT_FAULT: _stub(Task.DETECT_FAULT, FAULT_CLASS),
        Task.LOCATE_UNIT: _stub(Task.LOCATE_UNIT, "PT"),
        Task.IDENTIFY_PT: _stub(Task.IDENTIFY_PT, "wa-g"),
    })
    decision = decide(_fault_wave(), model)
    assert decision.verdict == "Trip"
    assert decision.detected
    assert decision.fault_unit == "PT"
    assert decision.fault_type == "wa-g"
    assert decision.disturbance_type is None
    assert set(decision.stage_probabilities) == {"detect", "locate", "fault_type"}


def test_disturbance_route_restrains_and_never_locates():
    model = _stub_pipeline({
        Task.DETECT_FAULT: _stub(Task.DETECT_FAULT, DISTURBANCE_CLASS),
        Task.IDENTIFY_DISTURBANCE: _stub(
            Task.IDENTIFY_DISTURBANCE, "MagnetizingInrush"
        ),
    })
    decision = decide(_fault_wave(), model)
    assert decision.verdict == "Restrain"
    assert decision.disturbance_type == "MagnetizingInrush"
    assert decision.fault_unit is None and decision.fault_type is None
    assert set(decision.stage_probabilities) == {"detect", "disturbance"}


def test_unit_routing_truth_table():
    for unit, task in ((u.value, t) for u, t in (
        (Unit.EXCITING, Task.IDENTIFY_EXCITING),
        (Unit.SERIES, Task.IDENTIFY_SERIES),
        (Unit.PT, Task.IDENTIFY_PT),
    )):
        model = _stub_pipeline({
            Task.DETECT_FAULT: _stub(Task.DETECT_FAULT, FAULT_CLASS),
            Task.LOCATE_UNIT: _stub(Task.LOCATE_UNIT, unit),
            task: _stub(task, "TurnToTurn"),
        })
        decision = decide(_fault_wave(), model)
        assert decision.verdict == "Trip"
        assert decision.fault_unit == unit
        assert decision.fault_type == "TurnToTurn"


def test_incomplete_model_rejected():
    slots = {task: _stub(task, _TASK_CLASSES[task][0]) for task in Task}
    del slots[Task.LOCATE_UNIT]
    model = PipelineModel(detector_cfg=CdfConfig(), slots=slots)
    with pytest.raises(IncompleteModel):
        decide(_steady(), model)


def test_latency_accounting_fields():
    model = _stub_pipeline({
        Task.DETECT_FAULT: _stub(Task.DETECT_FAULT, FAULT_CLASS),
        Task.LOCATE_UNIT: _stub(Task.LOCATE_UNIT, "PT"),
        Task.IDENTIFY_PT: _stub(Task.IDENTIFY_PT, "wa-g"),
    })
    wave = _fault_wave(rf=0.5)
    decision = decide(wave, model)
    lat = decision.latency
    assert lat["verdict_from_trigger_samples"] == SPC
    assert lat["verdict_from_trigger_samples"] <= 1.5 * SPC + 1
    assert lat["full_from_trigger_samples"] == 3 * SPC
    assert (
        lat["verdict_from_inception_samples"]
        == decision.trigger_index - wave.inception_index + SPC
    )


def test_class_missing_reported(small_corpus):
    corpus_dir, manifest = small_corpus
    rows = [r for r in manifest if r["disturbance_type"] != "Ferroresonance"]
    with pytest.raises(ClassMissing) as err:
        train_pipeline(corpus_dir, rows, TrainConfig(seed=0))
    assert err.value.task == Task.IDENTIFY_DISTURBANCE.value
    assert "Ferroresonance" in err.value.missing


def test_trained_pipeline_metadata_and_holdout(trained_pipeline):
    model, _ = trained_pipeline
    metrics = model.metadata["holdout_metrics"]
    assert set(metrics) == {t.value for t in Task}
    for entry in metrics.values():
        assert 0.0 <= entry["accuracy"] <= 1.0
    assert model.metadata["holdout_files"]
    for task in Task:
        assert model.slots[task].schema_hash == schema_hash(task)


def test_every_feature_finite_on_corpus(small_corpus):
    """No NaN or infinity leaks from any feature on any corpus waveform;
    degenerate windows engage the AR fallback instead."""
    from diffsentry.detector import detect
    from diffsentry.features import extract
    from diffsentry.pipeline import load_corpus_waveforms

    corpus_dir, manifest = small_corpus
    cfg = CdfConfig()
    checked = 0
    # DetectFault covers all five families on the 1.5-cycle window;
    # the other two cover both window lengths for every family
    tasks = (Task.DETECT_FAULT, Task.IDENTIFY_SERIES, Task.IDENTIFY_DISTURBANCE)
    for row, samples in load_corpus_waveforms(corpus_dir, manifest):
        event = detect(samples, cfg)
        if not event.triggered:
            continue
        for task in tasks:
            window = (event.detect_window if task is Task.DETECT_FAULT
                      else event.classify_window)
            vec = extract(window, task)
            assert np.all(np.isfinite(vec.values)), (row["file"], task)
        checked += 1
    assert checked >= 500


def test_trained_pipeline_decides_inrush_holdout(trained_pipeline):
    """100 seeded magnetizing-inrush draws from the sweep grid (the corpus
    cap leaves most grid points unseen): at least 95 restrained and named."""
    model, _ = trained_pipeline
    rng = np.random.default_rng(404)
    hits = 0
    for _ in range(100):
        params = {
            "residual_flux_pct": float(rng.choice([-80, -40, 40, 80])),
            "pattern": int(rng.integers(0, 3)),
            "tap": float(rng.choice([0.6, 1.0])),
            "shift": str(rng.choice(["forward", "backward"])),
        }
        step = int(rng.integers(0, 12))
        wave = generate_disturbance(
            DisturbanceType.MAGNETIZING_INRUSH, params, SPEC,
            inception_index=2 * SPC + round(step * SPC / 12),
        )
        decision = decide(wave, model)
        if (decision.verdict == "Restrain"
                and decision.disturbance_type == "MagnetizingInrush"):
            hits += 1
    assert hits >= 95


def test_trained_pipeline_trips_on_solid_fault(trained_pipeline):
    model, _ = trained_pipeline
    decision = decide(_fault_wave(), model)
    assert decision.verdict == "Trip"
    assert decision.fault_unit == "PT"


def test_streaming_matches_batch(trained_pipeline):
    model, _ = trained_pipeline
    wave = _fault_wave()
    batch = decide(wave, model)
    stream = StreamingClassifier(model, SPEC)
    records = []
    for s in wave.samples:
        records.extend(stream.push(s))
    assert [r["stage"] for r in records] == ["verdict", "full"]
    verdict, full = records
    assert verdict["verdict"] == batch.verdict
    assert verdict["trigger_index"] == batch.trigger_index
    # verdict must be available as soon as the post-trigger cycle closes
    assert verdict["emitted_at_sample"] == batch.trigger_index + SPC - 1
    assert full["verdict"] == batch.verdict
    assert full["fault_unit"] == batch.fault_unit
    assert full["fault_type"] == batch.fault_type


def test_save_load_round_trip(tmp_path, trained_pipeline):
    model, _ = trained_pipeline
    path = tmp_path / "pipeline.json"
    save_pipeline(model, path)
    loaded = load_pipeline(path)
    wave = _fault_wave()
    a = decide(wave, model)
    b = decide(wave, loaded)
    assert a.to_dict() == b.to_dict()


def test_load_rejects_schema_tamper(tmp_path, trained_pipeline):
    import json

    model, _ = trained_pipeline
    path = tmp_path / "pipeline.json"
    save_pipeline(model, path)
    bundle = json.loads(path.read_text())
    bundle["slots"]["DetectFault"]["schema_hash"] = "0" * 16
    path.write_text(json.dumps(bundle))
    with pytest.raises(SchemaMismatch):
        load_pipeline(path)
