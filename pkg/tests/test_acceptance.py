"""The ten acceptance criteria, one test each, at their stated tolerances."""
import pytest

from snvtune import acceptance


@pytest.mark.parametrize("number", range(1, 11))
def test_criterion(number, config, record_criterion):
    crit = record_criterion(acceptance.CRITERIA[number - 1](config))
    failed = [c for c in crit.checks if not c["pass"]]
    assert not failed, "; ".join(f"{c['name']} = {c['value']!r}, target {c['target']}" for c in failed)
