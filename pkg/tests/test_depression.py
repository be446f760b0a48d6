import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emodep.depression import (
    DepressionTrainConfig,
    ExperimentReport,
    SessionModel,
    SessionModelConfig,
    aggregate,
    audio_summary,
    build_inputs,
    f1_depressed,
    fuse_reports,
    load_sessions,
    multi_seed_protocol,
    train_depression,
    vote_fusion,
)
from emodep.depression.train import SeedReport
from emodep.emotion import EmotionSegment
from emodep.errors import DegenerateSplit, EmptySession, InvalidInput, SeedFailure
from emodep.manifest import load_manifest

from oracles import population_std


@pytest.fixture(scope="module")
def audio_split(small_depression):
    sessions = load_sessions(load_manifest(small_depression))
    train = build_inputs("audio", [s for s in sessions if s.split == "train"])
    dev = build_inputs("audio", [s for s in sessions if s.split == "dev"])
    return train, dev


def test_zero_model_scores_half():
    m = SessionModel.zeros(SessionModelConfig(input_dim=5))
    p = m.predict_proba([np.ones((3, 5)), np.zeros((1, 5))])
    assert np.array_equal(p, [0.5, 0.5])


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 9), st.sampled_from(["lstm", "gru"]), st.integers(0, 2**31 - 1))
def test_probability_range(length, cell, seed):
    rng = np.random.default_rng(seed)
    m = SessionModel.create(SessionModelConfig(input_dim=4, cell=cell, hidden=6), rng)
    p = m.predict_proba([rng.normal(size=(length, 4)) * 10])
    assert 0.0 <= p[0] <= 1.0


def test_empty_session():
    with pytest.raises(EmptySession):
        SessionModel.zeros(SessionModelConfig(input_dim=2)).predict_proba([np.zeros((0, 2))])


def test_audio_summary_constant_frames():
    seg = EmotionSegment(id="c", audio=np.full((12, 80), 3.0))
    s = audio_summary(seg)
    assert s.shape == (160,)
    assert np.all(s[:80] == 3.0) and np.all(s[80:] == 0.0)


def test_f1_examples():
    assert f1_depressed([1, 0, 1, 0], [1, 0, 1, 0]) == 1.0
    assert f1_depressed([1, 0], [1, 1]) == pytest.approx(2 / 3)
    assert f1_depressed([0, 0, 0], [1, 0, 1]) == 0.0


def test_vote_table():
    for a in (0, 1):
        for t in (0, 1):
            for e in (0, 1):
                assert vote_fusion(a, t, e) == int(a + t + e >= 2)
    assert np.array_equal(vote_fusion([1, 0], [1, 0], [0, 1]), [1, 0])


def _stub(scores):
    def trainer(modality, train, dev, seed, config):
        return None, SeedReport(seed=seed, f1=scores[seed])
    return trainer


def test_protocol_aggregates_injected_scores():
    report, _ = multi_seed_protocol("audio", None, None, n_seeds=3, trainer=_stub([0.5, 0.7, 0.9]))
    agg = report.aggregates
    assert agg["F1_MAX"] == 0.9 and agg["F1_AVG"] == pytest.approx(0.7)
    assert agg["F1_STD"] == pytest.approx(population_std([0.5, 0.7, 0.9]), abs=1e-12)
    assert agg["F1_STD"] == pytest.approx(0.163299, abs=1e-6)
    assert [s.seed for s in report.seeds] == [0, 1, 2]


def test_single_seed_has_zero_std():
    report, _ = multi_seed_protocol("text", None, None, n_seeds=1, trainer=_stub([0.6]))
    assert report.aggregates == {"F1_MAX": 0.6, "F1_AVG": 0.6, "F1_STD": 0.0}
    with pytest.raises(InvalidInput):
        multi_seed_protocol("text", None, None, n_seeds=0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.randoms())
def test_aggregate_permutation_invariant(scores, rnd):
    shuffled = list(scores)
    rnd.shuffle(shuffled)
    a, b = aggregate(scores), aggregate(shuffled)
    for k in a:
        assert a[k] == pytest.approx(b[k], abs=1e-12)
    assert b["F1_STD"] == pytest.approx(population_std(scores), abs=1e-9)


def test_seed_failure_names_seed():
    def trainer(modality, train, dev, seed, config):
        if seed == 2:
            raise ValueError("boom")
        return None, SeedReport(seed=seed, f1=0.5)

    with pytest.raises(SeedFailure) as info:
        multi_seed_protocol("audio", None, None, n_seeds=4, trainer=trainer)
    assert info.value.seed == 2


def test_degenerate_split(audio_split):
    train, dev = audio_split
    keep = [i for i, y in enumerate(train.labels) if y == 0] + [int(np.flatnonzero(train.labels == 1)[0])]
    with pytest.raises(DegenerateSplit):
        train_depression("audio", train.subset(keep), dev, seed=0)


def test_training_is_seed_deterministic(audio_split):
    train, dev = audio_split
    cfg = DepressionTrainConfig(epochs=4)
    m1, r1 = train_depression("audio", train, dev, seed=3, config=cfg)
    m2, r2 = train_depression("audio", train, dev, seed=3, config=cfg)
    assert r1.to_json() == r2.to_json()
    for n in m1.params:
        assert np.array_equal(m1.params[n].data, m2.params[n].data)
    assert r1.f1 == r1.recompute_f1()
    assert set(r1.predictions) == set(dev.ids)


def test_separable_corpus_is_learned(audio_split):
    train, dev = audio_split
    _, rep = train_depression("audio", train, dev, seed=0, config=DepressionTrainConfig(epochs=40))
    assert rep.f1 == 1.0


def _report(modality, preds, labels, f1=None, seed=0):
    predictions = {f"s{i}": {"prob": float(p), "pred": int(p), "label": int(y)} for i, (p, y) in enumerate(zip(preds, labels))}
    rep = SeedReport(seed=seed, f1=f1_depressed(preds, labels) if f1 is None else f1, predictions=predictions)
    return ExperimentReport(modality, [rep])


def test_fuse_reports(tmp_path):
    labels = [1, 1, 0, 0]
    a = _report("audio", [1, 0, 0, 1], labels)
    t = _report("text", [1, 1, 1, 0], labels)
    e = _report("emotion", [0, 1, 0, 0], labels)
    fused = fuse_reports(a, t, e)
    assert [fused["sessions"][f"s{i}"]["fused"] for i in range(4)] == [1, 1, 0, 0]
    assert fused["fused_f1"] == 1.0
    assert fused["conflicts"]["count"] == 4
    a.save(tmp_path / "a.json")
    assert ExperimentReport.load(tmp_path / "a.json").to_json() == a.to_json()
