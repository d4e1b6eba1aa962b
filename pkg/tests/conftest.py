import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_runtest_logreport(report):
    # one visible verdict line per acceptance check
    base = report.nodeid.rpartition("::")[0]
    if report.when == "call" and base.endswith("test_acceptance.py"):
        name = report.nodeid.rpartition("::")[2]
        verdict = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {name}: {verdict}", flush=True)
