import pytest
from hypothesis import given, strategies as st

from dynmatch import InstanceError
from dynmatch.generators import (
    add_instance,
    adv_departures,
    compat,
    two_edge_path,
    random_instance,
    sud_instance,
    tightness,
)
from dynmatch.io import dumps, loads, read_instance, write_instance
from dynmatch.market import REVEALED, DepartureModel


def _same(a, b):
    assert a.T == b.T
    assert dict(a.values) == dict(b.values)
    assert a.departure == b.departure
    assert dict(a.metadata) == dict(b.metadata)


@pytest.mark.parametrize("inst", [
    two_edge_path(), tightness(0.1), adv_departures(5, 3, 5), add_instance(9, 3), sud_instance(6, 4),
    compat(8, 5, 0.3, seed=2, T=40),
    random_instance(12, 3, 0.7, "uniform", 4, departure=DepartureModel.exponential(2.5, REVEALED)),
])
def test_round_trip_families(inst, tmp_path):
    _same(inst, loads(dumps(inst)))
    path = tmp_path / "x.txt"
    write_instance(inst, path)
    _same(inst, read_instance(path))


@given(T=st.integers(0, 12), d=st.integers(0, 5), seed=st.integers(0, 2**32),
       dist=st.sampled_from(["int100", "uniform", "unit"]))
def test_round_trip_random(T, d, seed, dist):
    inst = random_instance(T, d, 0.6, dist, seed)
    _same(inst, loads(dumps(inst)))


def test_comments_and_blank_lines():
    inst = loads("# hello\n\nT 3 const 1\n1 2 1.0\n\n2 3 3.0\n")
    assert dict(inst.values) == {(1, 2): 1.0, (2, 3): 3.0}


@pytest.mark.parametrize("text", [
    "",
    "1 2 3\n",
    "T 3 const\n",
    "T 3 const 1\n1 3 2.0\n",
    "T 3 const 1\n1 2 x\n",
    "T 3 bogus 1\n",
    "T 2 pervertex 1\n",
])
def test_bad_files(text):
    with pytest.raises(InstanceError):
        loads(text)


def test_errors_name_the_line():
    with pytest.raises(InstanceError, match="line 3"):
        loads("T 3 const 1\n1 2 1\n2 3 nope\n")
