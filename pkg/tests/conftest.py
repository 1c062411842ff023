from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def a1_low_path() -> Path:
    return DATA_DIR / "a1_low.txt"


@pytest.fixture(scope="session")
def a1_high_path() -> Path:
    return DATA_DIR / "a1_high.txt"


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile (or load from cache) the active kernels once.

    Timed acceptance suites depend on this so JIT compilation never
    counts against a criterion's runtime budget.
    """
    from topicswitch.encoder import EncoderConfig, encode

    encode("warm up the kernels once", EncoderConfig(d_model=16, n_heads=2, n_layers=1, d_ff=32))
    encode("warm up the kernels once", EncoderConfig())
    return True
