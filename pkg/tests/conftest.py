import numpy as np
import pytest

from fpforge.formats import FLOAT16
from fpforge.kernels import ArrayArith, numba_available, use_backend

BACKEND_PARAMS = ["numpy"] + (["numba"] if numba_available() else [])


@pytest.fixture(scope="session", autouse=True)
def jit_warmup():
    """Compile the numba kernels once so timed tests measure steady state."""
    if numba_available():
        with use_backend("numba"):
            a = ArrayArith(FLOAT16)
            x = a.from_float(np.array([1.5, 2.0, 3.0]))
            for op in ("add", "sub", "mul", "div", "max", "compare"):
                getattr(a, op)(x, x)
            for op in ("neg", "sqrt", "log2", "exp2", "to_float"):
                getattr(a, op)(x)
            a.cas(x, x)
            a.rsh(x, 1)
            a.lsh(x, 1)


@pytest.fixture(params=BACKEND_PARAMS)
def backend(request):
    with use_backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
