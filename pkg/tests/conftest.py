import pytest


@pytest.fixture(autouse=True)
def _no_thread_override(monkeypatch):
    monkeypatch.delenv("TOMO_UNFOLD_THREADS", raising=False)
