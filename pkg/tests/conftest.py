import random

import pytest

from dialoracle.catalog import build_split_catalogs, sample_context_items
from dialoracle.contextgen import assemble_context
from dialoracle.ontology import default_ontology


@pytest.fixture(scope="session")
def onto():
    return default_ontology()


@pytest.fixture(scope="session")
def catalogs(onto):
    return build_split_catalogs(onto, (800, 150, 300), seed=101)


@pytest.fixture(scope="session")
def train_catalog(catalogs):
    return catalogs["train"]


@pytest.fixture
def make_ctx(onto, train_catalog):
    def _make(k=3, case="I", seed=0, catalog=None):
        rng = random.Random(seed)
        items = sample_context_items(catalog or train_catalog, k, rng, onto)
        return assemble_context(items, case, onto, rng)
    return _make
