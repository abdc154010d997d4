"""Shared fixtures: small synthetic corpora and one quickly fitted model.

Session scope keeps the expensive pieces (a short training run) to a
single execution for the whole suite.
"""

from __future__ import annotations

import pytest

from semcom.estimator import SemanticTransceiver
from semcom.synthetic import make_copy_corpus, make_french_english_corpus


@pytest.fixture(scope="session")
def copy_corpus():
    return make_copy_corpus(n_pairs=600, vocab_size=120, seed=11)


@pytest.fixture(scope="session")
def fr_corpus():
    return make_french_english_corpus(n_pairs=600, seed=7)


@pytest.fixture(scope="session")
def fitted_small(copy_corpus):
    """A briefly trained transceiver for API-level tests (not accuracy)."""
    est = SemanticTransceiver(epochs=6, seed=0)
    est.fit(copy_corpus.pairs[:400])
    return est
