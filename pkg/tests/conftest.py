import sys

import numpy as np
import pytest

from ctmkit import PlantedSpec, generate_planted


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", []) if module else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def planted():
    """The pinned planted corpus shared by the slower recovery tests."""
    spec = PlantedSpec(
        n_topics=8, n_docs=200, doc_length=60, vocab_per_topic=40,
        overlap_fraction=0.2, mixing_concentration=0.1, seed=42,
    )
    corpus, labels, theta, phi = generate_planted(spec)
    return {"spec": spec, "corpus": corpus, "labels": labels,
            "theta": theta, "phi": phi}


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
