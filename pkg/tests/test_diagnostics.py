import importlib
import pkgutil

import pytest

import app.core
from app.core.diagnostics import get_diagnostics

CORE_MODULES = sorted(info.name for info in pkgutil.iter_modules(app.core.__path__))


def test_warn_once_keeps_the_first_message_per_key(caplog):
    diagnostics = get_diagnostics()
    with caplog.at_level("WARNING", logger="app.core.diagnostics"):
        diagnostics.warn_once("grasp:3", "grasp 3 is never feasible")
        diagnostics.warn_once("grasp:3", "grasp 3 is never feasible (again)")
        diagnostics.warn_once("component", "graph has 2 disconnected parts")
    assert diagnostics.get_warnings() == ["grasp 3 is never feasible", "graph has 2 disconnected parts"]
    assert len(caplog.records) == 2


def test_reset_allows_a_key_to_warn_again():
    diagnostics = get_diagnostics()
    diagnostics.warn_once("outputs", "skipped trajectory output")
    diagnostics.reset()
    assert diagnostics.get_warnings() == []
    diagnostics.warn_once("outputs", "skipped trajectory output")
    assert diagnostics.get_warnings() == ["skipped trajectory output"]


@pytest.mark.parametrize("name", CORE_MODULES)
def test_core_modules_carry_the_project_header(name):
    module = importlib.import_module(f"app.core.{name}")
    title = module.__doc__.strip().splitlines()[0]
    assert title.endswith("Module for DroopPlan")
