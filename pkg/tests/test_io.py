import math

import numpy as np
import pytest

from conftest import scalar_system
from orps.errors import SchemaMismatch
from orps.io import dumps, read_trajectory_csv, write_trajectory_csv
from orps.solver import solve_linear_periodic


def test_roundtrip_is_lossless(tmp_path):
    s = scalar_system(a=-0.3, rho=3.0, impulses=[(0.5, 1.0, 1.0)], forcing="sin(t)")
    tr = solve_linear_periodic(s)
    p = tmp_path / "t.csv"
    write_trajectory_csv(tr, p)
    back = read_trajectory_csv(p, 1)
    assert list(back.rows()) .__len__() == len(list(tr.rows()))
    for (t1, s1, y1), (t2, s2, y2) in zip(tr.rows(), back.rows()):
        assert t1 == t2 and s1 == s2 and np.array_equal(y1, y2)
    assert back.jump_times == (0.5,)


def test_header_and_sides(tmp_path):
    s = scalar_system(rho=3.0, impulses=[(0.5, 1.0, 1.0)])
    p = tmp_path / "t.csv"
    write_trajectory_csv(solve_linear_periodic(s), p)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,side,y_1"
    assert "0.5,L,1.0" in lines and "0.5,R,3.0" in lines


@pytest.mark.parametrize("text", [
    "",
    "time,side,y_1\n0.0,-,1.0\n1.0,-,1.0\n",
    "t,side,y_1\n0.0,-,1.0\n",
    "t,side,y_1\n0.0,-,1.0\n1.0,X,1.0\n",
    "t,side,y_1\n0.0,-,1.0\n0.5,R,1.0\n1.0,-,1.0\n",
    "t,side,y_1\n0.0,-,1.0\n0.5,L,1.0\n",
    "t,side,y_1\n0.5,-,1.0\n0.2,-,1.0\n",
    "t,side,y_1\n0.0,-,1.0\n1.0,-,nan\n",
    "t,side,y_1\n0.0,-,1.0\n1.0,-\n",
    "t,side,y_1\n0.0,-,abc\n1.0,-,1.0\n",
])
def test_malformed_trajectory(tmp_path, text):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(SchemaMismatch):
        read_trajectory_csv(p)


def test_dimension_mismatch(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("t,side,y_1,y_2\n0.0,-,1.0,2.0\n1.0,-,1.0,2.0\n")
    with pytest.raises(SchemaMismatch):
        read_trajectory_csv(p, 1)


def test_json_deterministic_and_finite():
    obj = {"b": np.float64(0.1), "a": [np.inf, -np.inf, math.nan], "c": np.arange(2), "d": np.bool_(True)}
    text = dumps(obj)
    assert text == dumps(dict(reversed(list(obj.items()))))
    assert '"inf"' in text and '"-inf"' in text and '"nan"' in text
    assert text.index('"a"') < text.index('"b"')
