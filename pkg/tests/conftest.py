"""Shared fixtures: one full verification-suite run per session, plus a
terminal summary printing one PASS/FAIL line per acceptance criterion."""

import numpy as np
import pytest

from gmtlab import acceptance

#: criterion number -> (check id, one-line title)
CRITERIA = {
    1: ("scaling-law", "dilation power law r^(n+k)"),
    2: ("saddle-mass", "closed-form masses of omega_xy"),
    3: ("weak-form", "divergence-form pairing oracle 16/15"),
    4: ("pushforward", "linear straightening identity"),
    5: ("ball-lp-oracle", "ball LP vs exhaustive brute force"),
    6: ("taylor-blowup", "blow-up profile of saddle + cubic"),
    7: ("degree-detection", "tangent degree detection, dual route"),
    8: ("wos-halfplane-disc", "walk-on-spheres closed forms"),
    9: ("elliptic-reduction", "constant-coefficient reduction"),
    10: ("dimension-slopes", "mass-growth exponents"),
    11: ("two-sided-blowup", "two-sided flat blow-up"),
    12: ("weight-inequalities", "density panel inequalities"),
    13: ("determinism", "byte-identical artifacts"),
}

#: filled as criterion tests run; consumed by the terminal summary
OUTCOMES: dict[int, tuple[bool, str]] = {}


def _summarize(details: dict) -> str:
    parts = []
    for key, val in details.items():
        if isinstance(val, bool):
            parts.append(f"{key}={val}")
        elif isinstance(val, (int, np.integer)):
            parts.append(f"{key}={val}")
        elif isinstance(val, (float, np.floating)):
            parts.append(f"{key}={val:.4g}")
        elif isinstance(val, list) and val and all(
                isinstance(v, (int, float, np.floating)) for v in val):
            parts.append(f"{key}=[" + ", ".join(f"{v:.4g}" for v in val) + "]")
    text = ", ".join(parts)
    return text if len(text) <= 180 else text[:177] + "..."


def record(criterion: int, result) -> None:
    OUTCOMES[criterion] = (result.passed, _summarize(result.details))


@pytest.fixture(scope="session")
def suite_results(tmp_path_factory):
    """Every registered check, run once with one worker."""
    out = tmp_path_factory.mktemp("verify_a")
    ctx = acceptance.SuiteContext(out_dir=str(out), workers=1)
    results = acceptance.run_all(ctx)
    return {r.check_id: r for r in results}, str(out)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(CRITERIA):
        check_id, title = CRITERIA[num]
        if num in OUTCOMES:
            passed, detail = OUTCOMES[num]
            verdict = "PASS" if passed else "FAIL"
            detail = f" ({detail})" if detail else ""
        else:
            verdict, detail = "NOT RUN", ""
        tr.write_line(
            f"criterion {num:02d} [{check_id}] {title}: {verdict}{detail}")
