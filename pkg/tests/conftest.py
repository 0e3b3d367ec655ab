import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from relscene import SeedLibrary, gen_dataset, load_corpus, load_dataset


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def library():
    return SeedLibrary.synthetic()


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory, corpus, library):
    """2 scenes per sub-relation (22 scenes), seed 7."""
    out = tmp_path_factory.mktemp("dataset_small")
    gen_dataset(corpus, library, pairs_per_relation=2, rng_seed=7, out_dir=out)
    return out


@pytest.fixture(scope="session")
def small_manifests(small_dataset):
    return load_dataset(small_dataset)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance-criterion verdict lines into the run log."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for line in RESULTS:
            terminalreporter.write_line(line)
