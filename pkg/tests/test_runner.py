import pytest

from fgk.calculus.checks import run_identity
from fgk.errors import NonFlatError
from fgk.schemas import FAIL, PASS, CheckRecord
from fgk.services.runner import run_jobs


def _job(*names):
    return lambda: [CheckRecord(name=name, status=PASS) for name in names]


def _broken():
    raise NonFlatError("テンソルが定数ではありません")


@pytest.mark.parametrize("workers", [1, 4])
def test_records_are_sorted_by_name(workers):
    jobs = [("z", _job("z.last")), ("a", _job("a.second", "a.first")), ("m", _job("m.middle"))]
    records = run_jobs(jobs, workers)
    assert [record.name for record in records] == ["a.first", "a.second", "m.middle", "z.last"]


def test_failing_job_becomes_error_record():
    records = run_jobs([("starprod.unit", _broken), ("a", _job("a.ok"))], workers=2)
    assert records[0].name == "a.ok"
    failed = records[1]
    assert failed.name == "starprod.unit"
    assert failed.status == FAIL
    assert failed.residual == "error"
    assert "定数" in failed.detail


def test_run_identity_stops_at_first_nonzero_residual():
    seen = []

    def case(value):
        def compute():
            seen.append(value)
            return value
        return compute

    record = run_identity("demo", [(["0"], case(0)), (["2"], case(2)), (["3"], case(3))])
    assert record.status == FAIL
    assert record.residual == "2"
    assert record.witness == ["2"]
    assert seen == [0, 2]
    assert run_identity("empty", []).status == PASS
