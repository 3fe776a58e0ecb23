import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from priordetect.density_models import GaussianMixturePair

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"


def load_mixture_corpus():
    data = json.loads((FIXTURES / "mixture_pairs.json").read_text())
    out = []
    for e in data["pairs"]:
        pair = GaussianMixturePair(tuple(map(tuple, e["components0"])), tuple(map(tuple, e["components1"])))
        out.append((e["id"], pair, e["q"]))
    return out


@pytest.fixture(scope="session")
def mixture_corpus():
    return load_mixture_corpus()


# ---- per-criterion verdicts for the acceptance suite

_VERDICTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, label = mark.args
    entry = _VERDICTS.setdefault(number, {"label": label, "ok": True, "seconds": 0.0})
    entry["seconds"] += rep.duration
    if rep.when == "call" or rep.failed:
        entry["ok"] = entry["ok"] and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        e = _VERDICTS[number]
        verdict = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  {e['label']} ({e['seconds']:.1f}s)")
