import json
import pathlib
import warnings

import numpy as np
import pytest

from cohilbert import special_functions as sf
from cohilbert.bvp_pipeline import NearSingularityWarning

ORACLES = json.loads(pathlib.Path(__file__).with_name("oracle_values.json").read_text())
BACKENDS = ["python"] + (["cython"] if sf._compiled is not None else [])


def cval(pair):
    return complex(pair[0], pair[1])


@pytest.fixture(params=BACKENDS)
def backend(request):
    prev = sf.BACKEND
    sf.set_backend(request.param)
    yield request.param
    sf.set_backend(prev)


@pytest.fixture(autouse=True)
def _quiet_near_singular():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearSingularityWarning)
        yield


@pytest.fixture(scope="session")
def oracles():
    return ORACLES


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))


# criterion number -> status line, filled by test_acceptance and printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
