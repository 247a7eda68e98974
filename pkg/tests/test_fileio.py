import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from plstab.density import random_density
from plstab.errors import ParseError
from plstab.experiments import make_example
from plstab.fileio import emit, io_roundtrip, parse, save


def test_laplace_roundtrip(laplace, tmp_path):
    path = tmp_path / "lap.json"
    save(laplace, path)
    assert io_roundtrip(path) == laplace
    assert emit(parse(path.read_text())) == path.read_text()


@given(st.integers(0, 10**6), st.integers(1, 6))
def test_random_density_roundtrip_is_bitwise(seed, n):
    d = random_density(seed, n)
    text = emit(d)
    back = parse(text)
    assert back == d and emit(back) == text


def test_triple_roundtrip_and_alpha_default():
    t = make_example("exa3", 0.05)
    data = json.loads(emit(t))
    del data["alpha"]
    back = parse(json.dumps(data, indent=2))
    assert back.alpha == 0.5
    assert '"alpha": 0.5' in emit(back)
    assert emit(parse(emit(back))) == emit(back)


def test_keys_sorted_and_floats_17_digits(laplace):
    text = emit(laplace)
    keys = list(json.loads(text))
    assert keys == sorted(keys)
    assert "-0.69314718055994529" in text


@pytest.mark.parametrize(
    "text, field, line",
    [
        ('{"knots": [1, 0], "logvals": [0, 0]}', "knots", 1),
        ('{\n"knots": [0, 1],\n"logvals": [0]\n}', "logvals", 3),
        ('{"knots": [0, 1], "logvals": [0, 0], "colour": 1}', "colour", 1),
        ('{"knots": [0, 1], "logvals": [0, "a"]}', "logvals", 1),
        ('{"knots": [0, 1], "logvals": [0, 0], "normalized": "yes"}', "normalized", 1),
    ],
)
def test_parse_errors_locate_problem(text, field, line):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert info.value.field == field and info.value.line == line


def test_syntax_error_has_line():
    with pytest.raises(ParseError) as info:
        parse('{\n"knots": [0, 1],\n')
    assert info.value.line is not None


def test_invalid_shape_is_parse_error():
    with pytest.raises(ParseError):
        parse('{"knots": [0, 1, 2], "logvals": [0, -1, 0]}')
    with pytest.raises(ParseError):
        parse('{"knots": [0, 2], "logvals": [0, 0], "normalized": true}')
