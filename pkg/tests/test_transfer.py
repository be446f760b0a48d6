import numpy as np
import pytest

from emodep.depression import DepressionTrainConfig, build_inputs, load_sessions, train_depression
from emodep.emotion import EmotionConfig, EmotionModel
from emodep.errors import ChecksumError, EmptySession, MissingFile, ModalityMismatch
from emodep.manifest import load_manifest
from emodep.transfer import FeatureCache, decode_cache, encode_cache, extract_to_dir, freeze, load_feature_dir


@pytest.fixture(scope="module")
def sessions(small_depression):
    return load_sessions(load_manifest(small_depression))


def test_freeze_hash_and_idempotence(small_model):
    ex = freeze(small_model)
    assert ex.hash == small_model.astype(np.float32).content_hash()
    assert freeze(ex).hash == ex.hash
    assert ex.verify() == ex.hash


def test_frozen_parameters_are_read_only(small_model):
    ex = freeze(small_model)
    p = next(iter(ex.params.values()))
    assert not p.requires_grad
    with pytest.raises(ValueError):
        p.data[...] = 0.0


def test_checkpoint_round_trip_and_truncation(small_model, tmp_path):
    path = tmp_path / "m.ckpt"
    small_model.save(path)
    assert freeze(path).hash == freeze(small_model).hash
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(ChecksumError):
        freeze(path)
    with pytest.raises(MissingFile):
        freeze(tmp_path / "absent.ckpt")


def test_feature_width_and_determinism(small_model, sessions):
    ex = freeze(small_model)
    seg = sessions[0].segments[0]
    a, b = ex.extract_segment(seg), ex.extract_segment(seg)
    assert a.dim == 448 and a.values.dtype == np.float32
    assert np.array_equal(a.values, b.values) and a.source_checkpoint == ex.hash


@pytest.mark.parametrize("modality,dim", [("A", 128), ("T", 320)])
def test_single_branch_width(modality, dim, sessions):
    ex = freeze(EmotionModel.create(EmotionConfig(modality=modality), seed=0))
    assert ex.extract_segment(sessions[0].segments[0]).dim == dim == ex.dim


def test_missing_branch_input(small_model, sessions):
    seg = sessions[0].segments[0]
    seg_no_audio = type(seg)(id="x", context=seg.context)
    with pytest.raises(ModalityMismatch):
        freeze(small_model).extract_segment(seg_no_audio)


def test_session_shapes_and_order(small_model, sessions):
    ex = freeze(small_model)
    sess = max(sessions, key=lambda s: len(s.segments))
    rows = ex.extract_session(sess)
    assert rows.shape == (len(sess.segments), 448)
    assert ex.extract_session(sess.segments[:1]).shape == (1, 448)
    assert np.array_equal(ex.extract_session(sess.segments[::-1]), rows[::-1])
    per_seg = np.stack([ex.extract_segment(s).values for s in sess.segments])
    assert np.array_equal(ex.extract_batch(sess.segments), per_seg)
    with pytest.raises(EmptySession):
        ex.extract_session([])


def test_thirty_segments(small_model, sessions):
    segs = [s for sess in sessions for s in sess.segments][:30]
    assert len(segs) == 30
    assert freeze(small_model).extract_batch(segs).shape == (30, 448)


def test_downstream_training_leaves_extractor_untouched(small_model, sessions, tmp_path):
    ex = freeze(small_model)
    before = {n: p.data.copy() for n, p in ex.params.items()}
    index = extract_to_dir(ex, sessions, tmp_path / "feat")
    features = load_feature_dir(tmp_path / "feat", expected_hash=ex.hash)
    assert index["dim"] == 448 and set(features) == {s.id for s in sessions}
    train = build_inputs("emotion", [s for s in sessions if s.split == "train"], features)
    dev = build_inputs("emotion", [s for s in sessions if s.split == "dev"], features)
    train_depression("emotion", train, dev, seed=0, config=DepressionTrainConfig(epochs=3))
    assert ex.verify() == ex.hash
    for n, p in ex.params.items():
        assert p.grad is None or not np.any(p.grad)
        assert np.array_equal(p.data, before[n])
    with pytest.raises(ChecksumError):
        load_feature_dir(tmp_path / "feat", expected_hash="0" * 64)


def test_cache_round_trip_and_truncation():
    cache = FeatureCache("s1", ["a", "b", "c"], "f" * 64, np.arange(12, dtype=np.float32).reshape(3, 4))
    blob = encode_cache(cache)
    back = decode_cache(blob)
    assert back.segment_ids == cache.segment_ids and back.checkpoint_hash == cache.checkpoint_hash
    assert np.array_equal(back.values, cache.values)
    with pytest.raises(ChecksumError, match="truncated"):
        decode_cache(blob[:-4])
    with pytest.raises(ChecksumError):
        decode_cache(b"NOTMAGIC" + blob[8:])
