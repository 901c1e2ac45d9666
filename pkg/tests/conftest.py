"""Shared fixtures: one fully built and adapted stack at the official seed.

Building corpora and training heads is the expensive part of the suite, so
both are session-scoped and shared by the corpus, adaptation, pipeline, and
acceptance tests.
"""

import numpy as np
import pytest

from kira import adapt
from kira.corpus import DOMAIN_IDS, DomainSpec, build_domain_corpus
from kira.encoders import SyntheticImageEncoder
from kira.pipeline import Pipeline

from seeds import OFFICIAL_SEED


@pytest.fixture(scope="session")
def image_encoder():
    return SyntheticImageEncoder(seed=0)


@pytest.fixture(scope="session")
def corpora(image_encoder):
    return {
        d: build_domain_corpus(DomainSpec.default(d), OFFICIAL_SEED, image_encoder)
        for d in DOMAIN_IDS
    }


def train_domain(corpus, seed=OFFICIAL_SEED):
    """Full adaptation recipe for one corpus: triplet train + few-shot."""
    ids, base = corpus.base_embeddings()
    labels = corpus.chunk_labels()
    cfg = adapt.TrainConfig(seed=seed)
    head, trace = adapt.train(
        base, labels, cfg, content_keys=corpus.content_keys()
    )
    support, support_labels = adapt.build_support_set(
        base, labels, cfg.shots, seed=cfg.seed
    )
    head = adapt.fewshot_adapt(head, support, support_labels, cfg)
    return head, trace


@pytest.fixture(scope="session")
def trained(corpora):
    """domain_id -> (adapted head, training trace) at the official seed."""
    return {d: train_domain(c) for d, c in corpora.items()}


@pytest.fixture(scope="session")
def pipelines(corpora, trained):
    return {d: Pipeline(corpora[d], trained[d][0]) for d in corpora}


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
