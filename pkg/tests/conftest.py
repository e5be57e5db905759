import pytest

from snvtune.config import load_config

acceptance_key = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[acceptance_key] = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(acceptance_key, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        crit = results[number]
        terminalreporter.write_line(crit.line())
        for c in crit.checks:
            if not c["pass"]:
                terminalreporter.write_line(f"    failed: {c['name']} = {c['value']!r} (target {c['target']})")


@pytest.fixture(scope="session")
def config():
    return load_config()


@pytest.fixture
def record_criterion(request):
    def record(crit):
        request.config.stash[acceptance_key][crit.number] = crit
        print(crit.line())
        for c in crit.checks:
            print(f"    {'ok  ' if c['pass'] else 'FAIL'} {c['name']}: {c['value']!r} (target {c['target']})")
        return crit

    return record
