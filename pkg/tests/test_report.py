import json
from fractions import Fraction

import numpy as np
from hypothesis import given, strategies as st

from twoweight.measure import Interval
from twoweight.report import (SCHEMA, build_report, digest, jsonable, without_timestamp,
                              write_csv, write_report)


def test_jsonable_types():
    out = jsonable({"f": Fraction(1, 3), "a": np.arange(2), "i": Interval(0, 1),
                    "x": np.float64(0.5), "b": np.bool_(True), "n": float("nan")})
    assert out == {"f": "1/3", "a": [0, 1], "i": [0, 1], "x": 0.5, "b": True, "n": "nan"}
    json.dumps(out)


@given(st.dictionaries(st.text(max_size=5), st.integers() | st.floats(allow_nan=False)))
def test_digest_ignores_key_order(d):
    flipped = dict(reversed(list(d.items())))
    assert digest(d) == digest(flipped)


def test_timestamp_not_in_digest(tmp_path):
    a = build_report("x", {"seed": 1}, {"v": 2}, timestamp="t1")
    b = build_report("x", {"seed": 1}, {"v": 2}, timestamp="t2")
    assert a["schema"] == SCHEMA
    assert without_timestamp(a) == without_timestamp(b)
    assert a["inputs_digest"] != build_report("x", {"seed": 2}, {})["inputs_digest"]
    p = write_report(a, tmp_path)
    assert json.loads(p.read_text())["results"] == {"v": 2}


def test_csv(tmp_path):
    p = write_csv([{"a": 1, "b": [1, 2]}, {"a": 2, "c": "x"}], tmp_path / "t.csv")
    lines = p.read_text().splitlines()
    assert lines[0] == "a,b,c"
    assert len(lines) == 3
