import pytest

from treedbo import _fastcore


@pytest.fixture(scope="session", autouse=True)
def _warm_jit():
    # compile the hot kernels once so per-test runtime bounds are meaningful
    _fastcore.warmup()
