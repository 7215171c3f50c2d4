import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from subgrowth.envelope import ResultEnvelope, Timer, error_envelope, jsonable, validate
from subgrowth.errors import InvalidArgument, PartialCensus


def test_jsonable():
    value = {
        1: Fraction(3, 2),
        "whole": Fraction(4),
        "arr": np.arange(3),
        "i": np.int64(5),
        "f": np.float32(0.5),
        "b": np.bool_(True),
        "p": Path("/tmp/a"),
        "s": {3, 1},
    }
    assert jsonable(value) == {
        "1": "3/2",
        "whole": 4,
        "arr": [0, 1, 2],
        "i": 5,
        "f": 0.5,
        "b": True,
        "p": "/tmp/a",
        "s": [1, 3],
    }


def test_json_is_sorted_and_valid():
    env = ResultEnvelope("x y", inputs={"b": 1, "a": 2}, outputs={"total": 3}, provenance={"total": "sum"})
    text = env.to_json()
    assert text.index('"command"') < text.index('"inputs"') < text.index('"outputs"')
    assert validate(text)["outputs"] == {"total": 3}
    assert validate(env) == json.loads(text)


def test_numeric_output_needs_provenance():
    env = ResultEnvelope("x", outputs={"total": 3, "flag": True, "label": "a"})
    with pytest.raises(InvalidArgument):
        validate(env)
    env.provenance["total"] = "count"
    assert validate(env)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("provenance"),
        lambda d: d.update(schema=2),
        lambda d: d.update(outputs=[]),
        lambda d: d.update(provenance=["a"]),
        lambda d: d.update(ok=False),
    ],
)
def test_validate_rejects(mutate):
    doc = ResultEnvelope("x").to_dict()
    mutate(doc)
    with pytest.raises(InvalidArgument):
        validate(doc)


def test_validate_rejects_non_json():
    with pytest.raises(InvalidArgument):
        validate("{oops")
    with pytest.raises(InvalidArgument):
        validate("[]")


def test_error_envelope_carries_partial():
    exc = PartialCensus("too big", partial={"computed": {"1": 1}, "skipped": [5]})
    env = error_envelope("congruence gamma-n", {"n": 6}, exc)
    doc = validate(env.to_json())
    assert not doc["ok"]
    assert doc["error"] == {"type": "PartialCensus", "message": "too big", "partial": {"computed": {"1": 1}, "skipped": [5]}}


def test_csv_prefers_tabular_outputs():
    env = ResultEnvelope("t", outputs={"rows": [{"n": 1, "v": [1, 2]}, {"n": 2, "extra": "e"}], "total": 3})
    lines = env.to_csv().splitlines()
    assert lines[0] == "n,v,extra"
    assert lines[1] == '1,"[1, 2]",'
    assert lines[2] == "2,,e"


def test_csv_scalar_row():
    env = ResultEnvelope("t", outputs={"b": 2, "a": 1, "nested": {"x": 1}})
    assert env.to_csv() == "a,b\n1,2\n"
    assert env.render("json") == env.to_json()


def test_timer():
    with Timer() as t:
        sum(range(1000))
    assert t.ms >= 0
