import pytest
from kgdamp.support import checks


def test_list_checks() -> None:
    names = checks.list_checks()
    assert len(names) == 8
    assert names[0] == "energy_identity_line"
    assert "equipartition" in names


@pytest.mark.parametrize(
    "name_filter, expected",
    [
        ("energy", ["energy_identity_line", "energy_identity_radial"]),
        ("rate", ["rate_formula"]),
        ("nothing", []),
    ],
)
def test_select_checks(name_filter, expected) -> None:
    assert checks.select_checks(name_filter) == expected


def test_empty_selection() -> None:
    table = checks.run_checks("nothing")
    assert table.empty
    assert list(table.columns) == ["name", "passed", "value", "threshold", "detail"]
    assert checks.format_table(table) == "no checks selected"


@pytest.mark.parametrize("name", ["rate_formula", "truncation_example", "classification_examples"])
def test_fast_checks_pass(name) -> None:
    table = checks.run_checks(name)
    assert list(table["name"]) == [name]
    assert bool(table["passed"].iloc[0]), table["detail"].iloc[0]


def test_failing_check_is_reported(monkeypatch) -> None:
    def boom(use_sv_quotient: bool = True) -> checks.CheckResult:
        raise RuntimeError("solver exploded")

    monkeypatch.setitem(checks.CHECKS, "rate_formula", boom)
    table = checks.run_checks("rate_formula")
    assert not table["passed"].iloc[0]
    assert "RuntimeError: solver exploded" in table["detail"].iloc[0]
    text = checks.format_table(table)
    assert "FAIL" in text.splitlines()[1]


def test_format_table_pass_row() -> None:
    table = checks.run_checks("truncation")
    lines = checks.format_table(table).splitlines()
    assert lines[0].startswith("check")
    assert lines[1].startswith("truncation_example")
    assert "PASS" in lines[1]


@pytest.mark.slow
def test_energy_checks_need_the_difference_quotient() -> None:
    with_quotient = checks.run_checks("energy_identity_line")
    without = checks.run_checks("energy_identity_line", use_sv_quotient=False)
    assert with_quotient["passed"].all()
    assert not without["passed"].any()


@pytest.mark.slow
def test_full_suite_passes() -> None:
    table = checks.run_checks()
    assert len(table) == 8
    assert table["passed"].all(), checks.format_table(table)
