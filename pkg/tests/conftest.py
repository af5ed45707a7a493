import pytest

from nestedsir.oracle import CACHE_ENV


@pytest.fixture(autouse=True, scope="session")
def _oracle_cache(tmp_path_factory):
    # keep oracle results out of the user's cache
    mp = pytest.MonkeyPatch()
    mp.setenv(CACHE_ENV, str(tmp_path_factory.mktemp("oracle-cache")))
    yield
    mp.undo()
