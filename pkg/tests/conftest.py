import pytest
from hypothesis import HealthCheck, settings

from plaplab import dirichlet_domain, generate_graph

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture
def path4():
    g = generate_graph("path", 4)
    return g, dirichlet_domain(g, ["1", "2"])


@pytest.fixture
def single():
    """One interior vertex with one unit edge to the boundary."""
    g = generate_graph("path", 2)
    return g, dirichlet_domain(g, ["0"])


# acceptance reporting: tests marked ``criterion(n, title)`` get one PASS/FAIL
# line each in the terminal summary, with any ``detail`` user property


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): numbered acceptance criterion")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    item.config._criteria[mark.args[0]] = (mark.args[1], "PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter, config):
    crit = getattr(config, "_criteria", {})
    if not crit:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(crit):
        title, status, detail = crit[n]
        line = f"criterion {n:2d} {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
