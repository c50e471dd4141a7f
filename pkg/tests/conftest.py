import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def chi_square_ok(counts, probs, alpha_stat=None):
    """Pearson chi-square below the 0.999 quantile (scipy as the reference)."""
    from scipy import stats

    counts = np.asarray(counts, dtype=float)
    expected = np.asarray(probs, dtype=float) * counts.sum()
    stat = float(((counts - expected) ** 2 / expected).sum())
    return stat < stats.chi2.ppf(0.999, len(counts) - 1)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str):
    line = f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
