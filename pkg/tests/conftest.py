import json
from importlib import resources

import pytest

from resprefine.loader import load_spec


@pytest.fixture(scope="session")
def petstore_doc() -> dict:
    return json.loads(resources.files("resprefine.fixtures").joinpath("data/petstore.json").read_text())


@pytest.fixture
def petstore(petstore_doc):
    return load_spec(petstore_doc)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES):
            terminalreporter.write_line(line)
