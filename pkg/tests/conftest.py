import numpy as np
import pytest

from orps.config import system_from_dict


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def scalar_config(a=0.0, rho=2.0, omega=1.0, impulses=(), forcing=None, **extra):
    nl = {"kind": "none"}
    if forcing is not None:
        nl["forcing"] = [forcing]
    cfg = {"schema": 1, "n": 1, "A": [[a]], "omega": omega, "rho": [[rho]],
           "impulses": [{"tau": t, "B": [[b]], "d": [d]} for t, b, d in impulses],
           "nonlinearity": nl}
    cfg.update(extra)
    return cfg


def scalar_system(*args, **kw):
    return system_from_dict(scalar_config(*args, **kw))


# --- acceptance summary lines ----------------------------------------------------------------

_ACCEPTANCE: dict[int, str] = {}


class _Verdict:
    def __init__(self, number: int):
        self.number = number

    def __call__(self, ok: bool, detail: str) -> bool:
        _ACCEPTANCE[self.number] = f"criterion {self.number}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok


@pytest.fixture
def verdict(request):
    """``verdict(ok, detail)`` records the one summary line of an acceptance criterion."""
    number = request.node.get_closest_marker("criterion").args[0]
    v = _Verdict(number)
    yield v
    if number not in _ACCEPTANCE:
        _ACCEPTANCE[number] = f"criterion {number}: FAIL  (raised before reaching a verdict)"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
