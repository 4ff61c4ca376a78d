import json

import pytest

from fgk.calculus.algebra import ChartSpec
from fgk.calculus.groupoid import assemble, kp_check
from fgk.calculus.parser import parse_poly
from fgk.calculus.poisson import PoissonTensor


def complex_chart(dimension: int = 1, fiber_truncation: int = 4, nu_truncation: int = 0) -> ChartSpec:
    return ChartSpec(dimension=dimension, flavor="complex",
                     fiber_truncation=fiber_truncation, nu_truncation=nu_truncation)


def real_chart(dimension: int = 2, fiber_truncation: int = 4) -> ChartSpec:
    return ChartSpec(dimension=dimension, flavor="real", fiber_truncation=fiber_truncation)


@pytest.fixture(scope="session")
def tensor_from():
    """文字列の行列から（複素なら KP 検証済みの）テンソルを作る"""
    def build(chart: ChartSpec, rows):
        entries = [[parse_poly(text, chart) for text in row] for row in rows]
        if chart.is_complex:
            return kp_check(entries, chart)
        return PoissonTensor(chart=chart, entries=tuple(tuple(row) for row in entries))
    return build


@pytest.fixture(scope="session")
def flat_chart():
    return complex_chart(nu_truncation=3)


@pytest.fixture(scope="session")
def flat_tensor(flat_chart, tensor_from):
    return tensor_from(flat_chart, [["1"]])


@pytest.fixture(scope="session")
def flat_groupoid(flat_tensor):
    return assemble(flat_tensor)


@pytest.fixture(scope="session")
def curved_chart():
    return complex_chart()


@pytest.fixture(scope="session")
def curved_tensor(curved_chart, tensor_from):
    return tensor_from(curved_chart, [["1 + z1*w1"]])


@pytest.fixture(scope="session")
def curved_groupoid(curved_tensor):
    return assemble(curved_tensor)


@pytest.fixture(scope="session")
def plane():
    """ℝ², η¹² = 1"""
    return real_chart()


@pytest.fixture(scope="session")
def plane_tensor(plane, tensor_from):
    return tensor_from(plane, [["0", "1"], ["-1", "0"]])


@pytest.fixture
def write_json(tmp_path):
    def write(name: str, payload) -> str:
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return str(path)
    return write


@pytest.fixture(autouse=True)
def _no_seed_override(monkeypatch):
    monkeypatch.delenv("FGK_SEED", raising=False)
    monkeypatch.delenv("FGK_WORKERS", raising=False)
