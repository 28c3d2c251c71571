import numpy as np
import pytest

from dmdseg import synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def clean_phantom():
    return synthetic.generate(synthetic.PhantomSpec(noise_sigma=0.0))


@pytest.fixture(scope="session")
def noisy_phantom():
    return synthetic.generate(synthetic.PhantomSpec(noise_sigma=0.05, seed=3))


def pytest_runtest_setup(item):
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        item.user_properties.append(("criterion", marker.args))


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, with any measured values."""
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" not in props:
                continue
            if outcome == "passed" and rep.when != "call":
                continue
            number, title = props["criterion"]
            verdict = "PASS" if outcome == "passed" else "FAIL"
            rows.append((number, verdict, title, props.get("measured", "")))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, verdict, title, measured in sorted(rows):
        line = f"{verdict}  criterion {number}: {title}"
        terminalreporter.write_line(f"{line}  [{measured}]" if measured else line)
