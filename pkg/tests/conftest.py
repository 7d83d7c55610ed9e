import pytest


@pytest.fixture(autouse=True)
def _no_cache(monkeypatch):
    monkeypatch.delenv("ORTHOBOUND_CACHE", raising=False)
