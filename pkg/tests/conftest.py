import pytest

from lnnrl.lexicon import default_lexicon


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()
