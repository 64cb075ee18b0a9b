import os

import pytest

# One line per acceptance criterion, filled in by tests/test_acceptance.py.
ACCEPTANCE = {}


_CAPTURE = None


def record(criterion, ok, detail):
    """Print one live line and fold it into the per-criterion summary."""
    line = f"[acceptance {criterion}] {'PASS' if ok else 'FAIL'}: {detail}"
    if _CAPTURE is not None:
        with _CAPTURE.global_and_fixture_disabled():
            print(line, flush=True)
    else:
        print(line, flush=True)
    prev = ACCEPTANCE.get(criterion)
    if prev is not None:
        ok = ok and prev[0]
        detail = prev[1] + "; " + detail
    ACCEPTANCE[criterion] = (bool(ok), detail)


def pytest_configure(config):
    global _CAPTURE
    _CAPTURE = config.pluginmanager.getplugin("capturemanager")


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(str(k).split(".")[0])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key:>3} {'PASS' if ok else 'FAIL'}  {detail}")


os.environ.setdefault("NUMBA_CACHE_DIR", os.path.join(os.path.dirname(__file__), "..", ".numba_cache"))


@pytest.fixture(scope="session")
def cauchy_well_spectrum():
    """Restricted Cauchy spectrum at ppu 200/400/800, shared across modules (about 10 s)."""
    from levytrap.spectral import cauchy_infinite_well_spectrum
    return cauchy_infinite_well_spectrum(15, (200, 400, 800))


@pytest.fixture(scope="session")
def cauchy_well_ground():
    from levytrap.grid import build_grid
    from levytrap.operators import make_potential
    from levytrap.spectral import ground_state
    return ground_state("cauchy", make_potential("infinite"), build_grid(1, 800))
