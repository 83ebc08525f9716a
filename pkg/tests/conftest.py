import pytest

from watersearch import SearchConfig, WatermarkConfig, train_ngram
from watersearch.corpus import synthetic_corpus


@pytest.fixture(scope="session")
def toy_docs():
    return synthetic_corpus(n_docs=300, doc_len=180, vocab_size=1200, branching=60, seed=7)


@pytest.fixture(scope="session")
def toy_model(toy_docs):
    return train_ngram(toy_docs, order=2, smoothing_k=1.0)


@pytest.fixture()
def wm_default():
    return WatermarkConfig(gamma=0.25, delta=4.0, scheme="soft", h=1, master_key=41)


@pytest.fixture()
def search_default():
    return SearchConfig(chunk_size=20, beams=5, alpha=0.75, max_tokens=200)
