import shutil

import pytest

# the core package is used only to generate fixtures and cross-validate the
# interchange files; the adapter sources never import it
from relscene import SeedLibrary, gen_dataset, load_corpus, load_dataset
from relscene.seeds import build_seed_corpus

from sceneadapter import PrototypeTagger


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def seed_dir(tmp_path_factory):
    return build_seed_corpus(tmp_path_factory.mktemp("adapter") / "seeds")


@pytest.fixture(scope="session")
def tagger(seed_dir):
    return PrototypeTagger.from_directory(seed_dir)


@pytest.fixture(scope="session")
def three_scenes(tmp_path_factory, corpus, seed_dir):
    """Three scene WAVs (one of them silent) plus their manifests."""
    root = tmp_path_factory.mktemp("adapter_scenes")
    dataset = gen_dataset(
        corpus, SeedLibrary.load(seed_dir), pairs_per_relation=1,
        rng_seed=11, out_dir=root / "dataset",
    )
    manifests = load_dataset(dataset)
    picked = [m for m in manifests if m.sub_relation in ("before", "and", "not")]
    audio_dir = root / "audio"
    audio_dir.mkdir()
    for m in picked:
        shutil.copy(dataset / m.audio_path, audio_dir / f"{m.scene_id}.wav")
    return audio_dir, picked
