import json
import math

import pytest
from hypothesis import given, strategies as st

from agora.canon import NonCanonicalizable, canonical_str, canonicalize

json_values = st.recursive(
    st.none()
    | st.booleans()
    | st.integers(min_value=-(2**63), max_value=2**63)
    | st.floats(allow_nan=False, allow_infinity=False)
    | st.text(),
    lambda children: st.lists(children, max_size=4)
    | st.dictionaries(st.text(), children, max_size=4),
    max_leaves=20,
)


def test_sorted_keys_and_no_whitespace():
    assert canonicalize({"b": 1, "a": 2}) == b'{"a":2,"b":1}'


def test_key_order_independent():
    assert canonicalize({"x": 1, "y": [{"b": 0, "a": 1}]}) == canonicalize(
        {"y": [{"a": 1, "b": 0}][:], "x": 1}
    )


def test_unicode_not_escaped():
    assert canonicalize({"k": "ü"}) == '{"k":"ü"}'.encode("utf-8")


def test_nested_key_sorting_is_bytewise():
    # "Z" (0x5a) sorts before "a" (0x61) in UTF-8 byte order.
    assert canonical_str({"a": 0, "Z": 1}) == '{"Z":1,"a":0}'


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), -float("inf")])
def test_nonfinite_rejected(bad):
    with pytest.raises(NonCanonicalizable):
        canonicalize({"x": bad})


def test_non_string_key_rejected():
    with pytest.raises(NonCanonicalizable):
        canonicalize({1: "x"})


def test_unsupported_type_rejected():
    with pytest.raises(NonCanonicalizable):
        canonicalize({"x": b"bytes"})


def test_error_reports_path():
    with pytest.raises(NonCanonicalizable, match="/a/0/b"):
        canonicalize({"a": [{"b": object()}]})


@given(json_values)
def test_round_trip(value):
    encoded = canonicalize(value)
    assert json.loads(encoded.decode("utf-8")) == value


@given(json_values)
def test_deterministic(value):
    assert canonicalize(value) == canonicalize(value)


@given(st.dictionaries(st.text(), st.integers(), min_size=2, max_size=6))
def test_insertion_order_irrelevant(d):
    reversed_d = dict(reversed(list(d.items())))
    assert canonicalize(d) == canonicalize(reversed_d)


@given(json_values)
def test_no_insignificant_whitespace(value):
    s = canonical_str(value)
    # Re-encoding the parsed value compactly must reproduce the string.
    assert json.dumps(
        json.loads(s), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ) == s


def test_float_shortest_form():
    assert canonical_str({"x": 0.5}) == '{"x":0.5}'
    assert not math.isnan(json.loads(canonical_str({"x": 1e-9}))["x"])
