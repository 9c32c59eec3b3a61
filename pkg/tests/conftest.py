from __future__ import annotations

import pytest

from ctl_lint import frontend
from ctl_lint.engine import Counters, EngineConfig, analyze_unit
from ctl_lint.speclang import load_builtin_checks


@pytest.fixture(scope="session")
def builtin_checks():
    return load_builtin_checks()


@pytest.fixture
def analyze(builtin_checks):
    """Parse and analyze a source snippet with the builtin catalog."""

    def run(source: str, file: str = "test.c", db=None, max_witnesses: int = 5,
            counters: Counters | None = None):
        tu = frontend.parse(source, file)
        config = EngineConfig(checkset_text="builtin", max_witnesses=max_witnesses)
        return analyze_unit(tu, builtin_checks, db, config, counters)

    return run
