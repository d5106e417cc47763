import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as hst

from maglap.records import Check, csv_text, dumps, fmt, write_text


def test_fmt():
    assert fmt(0.1) == "1.0000000000000001e-01"
    assert fmt(-2.0) == "-2.0000000000000000e+00"
    assert fmt(3) == "3" and fmt(True) == "true"
    assert fmt(math.inf) == "inf" and fmt(math.nan) == "nan"


@given(hst.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(x):
    assert float(fmt(x)) == x


def test_dumps_layout_and_order():
    obj = {"b": 1.5, "a": [1, 2.0], "z": 1 + 2j, "c": Check("x", True, 0.5, 1.0).as_dict(), "t": "s"}
    text = dumps(obj)
    assert text.endswith("\n")
    back = json.loads(text)
    assert list(back) == ["b", "a", "z", "c", "t"]
    assert back["z"] == {"re": 1.0, "im": 2.0}
    assert back["c"] == {"name": "x", "pass": True, "value": 0.5, "tolerance": 1.0}
    assert '"b": 1.5000000000000000e+00' in text


def test_dumps_nonfinite_and_numpy():
    back = json.loads(dumps({"i": math.inf, "n": np.float64(math.nan), "a": np.arange(2), "e": {}, "l": []}))
    assert back == {"i": "inf", "n": "nan", "a": [0, 1], "e": {}, "l": []}


def test_check_coerces():
    c = Check("n", np.bool_(False), np.float32(1.5), 2)
    assert c.passed is False and isinstance(c.value, float) and c.tolerance == 2.0


def test_csv_and_write(tmp_path):
    text = csv_text(["a", "b"], [(1.0, "x"), (2, 0.25)])
    assert text == "a,b\n1.0000000000000000e+00,x\n2,2.5000000000000000e-01\n"
    p = tmp_path / "t.csv"
    write_text(p, text)
    assert p.read_bytes() == text.encode()
