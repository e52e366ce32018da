"""Shared fixtures: the scene corpus and one full method-by-condition sweep."""

import time

import numpy as np
import pytest

from huefuse.pipeline import (
    DEFAULT_CONDITIONS,
    METHODS,
    PipelineConfig,
    evaluate_scene,
)

from scenes import corpus

CONDITION_FULL = "-4/-2/0/2/4"
CONDITION_UNDER = "-4/-2/0"
CONDITION_OVER = "0/2/4"


@pytest.fixture(scope="session")
def corpus_scenes():
    return corpus()


@pytest.fixture(scope="session")
def eval_sweep(corpus_scenes):
    """Metrics for every (scene, condition, method) cell, plus the wall time.

    Built once; both ordering criteria and the CSV-shape tests read from it.
    Keys are (scene index, condition label, method).
    """
    start = time.perf_counter()
    cfg = PipelineConfig()
    cells = {}
    for idx, hdr in enumerate(corpus_scenes):
        for condition, method, report in evaluate_scene(
            hdr, DEFAULT_CONDITIONS, METHODS, cfg
        ):
            cells[(idx, condition, method)] = report
    return cells, time.perf_counter() - start


def sweep_values(cells, condition, method, metric):
    """One metric across the corpus for a (condition, method) cell."""
    values = [
        getattr(report, metric)
        for (_, cond, meth), report in cells.items()
        if cond == condition and meth == method
    ]
    return np.array(values)


_CRITERIA = {
    1: "hue-plane algebra",
    2: "response-curve recovery",
    3: "ground-truth merge",
    4: "hue-correction ordering",
    5: "luminance-adjustment properties",
    6: "quality-index ordering",
    7: "metric correctness",
    8: "fusion properties",
    9: "file formats",
    10: "evaluation determinism",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one pass/fail line per acceptance criterion."""
    outcomes = {}
    for status, label in (
        ("passed", "PASS"),
        ("failed", "FAIL"),
        ("error", "FAIL"),
        ("skipped", "SKIP"),
    ):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid:
                continue
            number = int(nodeid.split("test_criterion_")[1].split("_")[0])
            # a setup error must not be overwritten by a passed teardown
            if outcomes.get(number) != "FAIL":
                outcomes[number] = label
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(outcomes):
        terminalreporter.write_line(
            f"criterion {number:2d} ({_CRITERIA[number]}): {outcomes[number]}"
        )
