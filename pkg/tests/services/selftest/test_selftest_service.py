# -*- coding: utf-8 -*-
"""
Tests for the self-test runner.

Covers:
- Every shipped check passes
- Report layout
- A raising or failing check marks the run as failed without aborting it
"""

import pytest

from modwigner.services import selftest_service
from modwigner.services.selftest_service import CHECKS, run_selftest


class TestChecks:

    @pytest.mark.parametrize("name", sorted(CHECKS))
    def test_check_passes(self, name):
        result = CHECKS[name]()
        assert result["status"] == "passed", result["message"]


class TestRunSelftest:

    def test_report_layout(self):
        report = run_selftest()
        assert report["status"] == "passed"
        assert set(report["checks"]) == set(CHECKS)
        assert report["elapsed_seconds"] >= 0

    def test_raising_check_fails_the_run(self, monkeypatch):
        def boom():
            raise ValueError("broken")

        monkeypatch.setattr(selftest_service, "CHECKS", {"boom": boom, **CHECKS})
        report = run_selftest()
        assert report["status"] == "failed"
        assert report["checks"]["boom"] == {"status": "failed", "message": "ValueError: broken"}
        assert report["checks"]["zak_round_trip"]["status"] == "passed"

    def test_failing_check_fails_the_run(self, monkeypatch):
        monkeypatch.setattr(
            selftest_service, "CHECKS", {"bad": lambda: {"status": "failed", "message": "off by one"}}
        )
        report = run_selftest()
        assert report["status"] == "failed"
        assert report["checks"]["bad"]["message"] == "off by one"
