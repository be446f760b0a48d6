import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from emodep.emotion import EmotionConfig, TrainConfig, train_emotion  # noqa: E402
from emodep.manifest import emotion_dataset, load_manifest  # noqa: E402
from emodep.synthetic import default_spec, gen_synthetic  # noqa: E402


def small_spec(mode, seed=0, n_train=8, n_dev=4):
    if mode == "depression":
        return default_spec(mode, seed, train_counts={"depressed": 4, "healthy": 4}, dev_counts={"depressed": 2, "healthy": 2},
                            session_length=(2, 4))
    classes = ("negative", "positive") if mode == "mosei" else ("angry", "happy", "sad", "neutral")
    return default_spec(mode, seed, train_counts={c: n_train for c in classes}, dev_counts={c: n_dev for c in classes})


@pytest.fixture(scope="session")
def small_iemocap(tmp_path_factory):
    out = tmp_path_factory.mktemp("iemocap")
    gen_synthetic(small_spec("iemocap"), out)
    return out / "manifest.jsonl"


@pytest.fixture(scope="session")
def small_mosei(tmp_path_factory):
    out = tmp_path_factory.mktemp("mosei")
    gen_synthetic(small_spec("mosei"), out)
    return out / "manifest.jsonl"


@pytest.fixture(scope="session")
def small_depression(tmp_path_factory):
    out = tmp_path_factory.mktemp("depression")
    gen_synthetic(small_spec("depression"), out)
    return out / "manifest.jsonl"


@pytest.fixture(scope="session")
def small_model(small_iemocap):
    """A briefly trained A+T iemocap-mode model."""
    ds = emotion_dataset(load_manifest(small_iemocap))
    model, _ = train_emotion(ds, EmotionConfig(), TrainConfig(epochs=2, batch_size=8), seed=0)
    return model


@pytest.fixture(scope="session")
def small_mosei_model(small_mosei):
    ds = emotion_dataset(load_manifest(small_mosei))
    model, _ = train_emotion(ds, EmotionConfig(mode="mosei"), TrainConfig(epochs=2, batch_size=8), seed=0)
    return model


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
