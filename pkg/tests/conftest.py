import numpy as np
import pytest

# filled by tests/test_acceptance.py: criterion number -> (passed, detail)
ACCEPTANCE_RESULTS = {}

ACCEPTANCE_TITLES = {
    1: "power allocation alpha* window and MSE/BER agreement",
    2: "theory vs simulation (n=400, r in {0.2,0.6}, rho in {0,5,10,15} dB)",
    3: "double descent of LS at beta=1 and BRO <= LS in BER",
    4: "saddle solver vs 2000x2000 log-grid brute force",
    5: "sphere-box closed form vs constrained minimization",
    6: "covariance identities and pilot-path estimate statistics",
    7: "scalar-function suite",
    8: "BRO KKT certificate and noiseless recovery",
}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_TITLES):
        if k not in ACCEPTANCE_RESULTS:
            tr.write_line(f"criterion {k}: NOT RUN  {ACCEPTANCE_TITLES[k]}")
            continue
        ok, detail = ACCEPTANCE_RESULTS[k]
        tr.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {ACCEPTANCE_TITLES[k]}  [{detail}]")
