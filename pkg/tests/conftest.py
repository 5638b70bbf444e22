from __future__ import annotations

import pytest

import helpers


@pytest.fixture
def config():
    return helpers.mock_config()


@pytest.fixture
def document():
    return helpers.make_document()


@pytest.fixture
def corpus():
    return helpers.make_corpus()


@pytest.fixture
def providers():
    return helpers.make_providers(handlers=helpers.judge_handlers())
