import pytest
from hypothesis import settings

from theta_lab.torus import TorusModulus

settings.register_profile("lab", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("lab")

SQUARE1 = TorusModulus(1, 1j)
SQUARE2 = TorusModulus(2, 1j)
SKEW2 = TorusModulus(2, 0.3 + 1.1j)
SKEW3 = TorusModulus(3, 0.3 + 1.1j)

# the two moduli used wherever a check runs "on both test moduli"
TEST_MODULI = [SQUARE1, SKEW2]
ALL_MODULI = [SQUARE1, SQUARE2, SKEW2, SKEW3]


@pytest.fixture(params=ALL_MODULI, ids=lambda m: f"d{m.delta}-{m.tau.real:g}+{m.tau.imag:g}i")
def modulus(request):
    return request.param


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def record_criterion(label: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE_LINES.append(f"{label}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
