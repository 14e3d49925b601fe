"""
Tests for the built-in self-check suites
"""

from cmgan.services.selfcheck import CheckResult, gradient_suite, oracle_suite, run_selfcheck, stft_suite


class TestSuites:
    def test_gradient_suite_passes(self):
        results = gradient_suite(seed=0)
        assert {r.name for r in results} >= {"conv_block", "conformer", "discriminator", "tf_loss", "time_loss"}
        failed = [r.line() for r in results if not r.passed]
        assert failed == []

    def test_injected_fault_is_caught(self):
        results = {r.name: r for r in gradient_suite(seed=0, inject_fault=True)}
        assert not results["conv_block"].passed
        assert results["prelu"].passed

    def test_stft_round_trip(self):
        (result,) = stft_suite(seed=1, trials=3)
        assert result.passed, result.line()

    def test_oracles_agree(self):
        results = oracle_suite(seed=2, pairs=2)
        assert results
        assert all(r.passed for r in results), [r.line() for r in results]

    def test_run_selfcheck_collects_all_suites(self):
        results = run_selfcheck(seed=0, trials=1, pairs=1)
        assert {r.suite for r in results} == {"gradients", "stft", "oracles"}


class TestCheckResult:
    def test_line_format(self):
        assert CheckResult(suite="stft", name="round_trip", passed=True, detail="ok").line() == "[PASS] stft/round_trip: ok"
        assert CheckResult(suite="gradients", name="conv_block", passed=False).line() == "[FAIL] gradients/conv_block: "
