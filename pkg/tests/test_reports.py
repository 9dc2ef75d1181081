import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ometric.reports import SCHEMA, dumps, envelope, format_float, to_csv


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_roundtrip(x):
    assert float(format_float(x)) == x or (x == 0 and format_float(x) == "0")


def test_non_finite():
    assert format_float(math.inf) == '"inf"'
    assert format_float(-math.inf) == '"-inf"'
    assert format_float(math.nan) == '"nan"'
    assert format_float(-0.0) == "0"


def test_dumps_is_valid_json_and_ordered():
    doc = envelope("x", {"b": [1, 2.5, None, True], "a": {"z": np.float64(0.1), "y": np.int64(3)}, "e": []})
    text = dumps(doc)
    back = json.loads(text)
    assert list(back) == ["schema", "command", "b", "a", "e"]
    assert back["schema"] == SCHEMA and back["a"] == {"z": 0.1, "y": 3}
    assert text.endswith("}\n")


def test_nested_lists_and_to_dict():
    class Thing:
        def to_dict(self):
            return {"v": math.inf}

    back = json.loads(dumps({"rows": [[1, 2], {"k": Thing()}]}))
    assert back["rows"] == [[1, 2], {"k": {"v": "inf"}}]


def test_unserializable():
    with pytest.raises(TypeError):
        dumps({"x": object()})


def test_csv_cells():
    text = to_csv(["a", "b", "c"], [[0.1, math.inf, None], [1, "x,y", -math.inf]])
    assert text == 'a,b,c\n0.10000000000000001,inf,\n1,"x,y",-inf\n'
