"""Bridge test fixtures: one small engine-built corpus directory on disk.

The engine package is a test-only dependency here — production bridge code
touches nothing but files.
"""

import pytest

from kira.corpus import DomainSpec, build_domain_corpus
from kira.storage import save_corpus


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    corpus = build_domain_corpus(DomainSpec.default("pathology"), seed=7)
    out = tmp_path_factory.mktemp("corpus")
    return save_corpus(corpus, out)
