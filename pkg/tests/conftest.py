import pytest

import synth


@pytest.fixture(scope="session")
def kdd_corpus(tmp_path_factory):
    """Full-composition KDD99-format corpus, generated once per session."""
    path = tmp_path_factory.mktemp("corpus") / "kdd10pct.csv"
    counts = synth.write_kdd_corpus(path)
    assert sum(counts.values()) == 494020
    return path
