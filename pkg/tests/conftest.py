import pytest

from prevopt.program_model import (
    AuxReplacement,
    Bundle,
    Community,
    Drug,
    DrugLine,
    Instance,
    Inventory,
    PreventionProgram,
)

# (criterion, passed, detail) rows filled by test_acceptance.py
ACCEPTANCE_RESULTS = []


def record(criterion: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((criterion, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


def one_program_instance(avail_a=100, avail_b=1000, avail_c=1000, users=10, qty_a=12,
                         weight=0.5, prog_weight=1.0, comm_weight=1.0, bundles=None):
    """One program, drug A replaceable by B (bundle 1) or C (bundle 2)."""
    if bundles is None:
        bundles = (Bundle("B", 8), Bundle("C", 6))
    return Instance(
        drugs=(Drug("A"), Drug("B"), Drug("C")),
        alternatives={"A": tuple(bundles)},
        communities=(Community("C1", comm_weight, {}),),
        programs=(
            PreventionProgram(
                id="P1",
                weight=prog_weight,
                users=users,
                coverage={"C1": users},
                prescription={"A": DrugLine(qty_a, weight)},
                replaceable=("A",),
            ),
        ),
        inventory=Inventory({"A": avail_a, "B": avail_b, "C": avail_c}, {}),
    )


def herbal_instance():
    """Main drug M with auxiliary X; the bundle swaps M+X for N+Y."""
    return Instance(
        drugs=(Drug("M", "main herb", True), Drug("N", "alt main", True), Drug("X"), Drug("Y")),
        alternatives={"M": (Bundle("N", 9, (AuxReplacement("X", "Y", 4),), {"G1": 1}, {"F1": -1}),)},
        communities=(Community("C1", 1.0, {"F1": 100}), Community("C2", 0.5, {"F1": 100})),
        programs=(
            PreventionProgram(
                id="P1",
                weight=1.0,
                users=30,
                coverage={"C1": 20, "C2": 10},
                prescription={"M": DrugLine(10, 1.0), "X": DrugLine(3, 0.25)},
                replaceable=("M",),
                shared={"G1": 2},
                nonshared={"F1": 1},
            ),
        ),
        inventory=Inventory({"M": 1000, "N": 1000, "X": 1000, "Y": 1000}, {"G1": 1000}),
    )


@pytest.fixture
def small_instance():
    return one_program_instance()
