import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from onebitvar.errors import FormatError, ZeroThreshold
from onebitvar.gaussians import std_normal_cdf
from onebitvar.quantize import (
    BinaryRecord,
    SensorGraph,
    dumps_record,
    loads_record,
    read_record,
    sign_and_predominance,
    threshold_quantize,
    write_record,
)


def test_graph_constructors():
    assert SensorGraph.complete(3).edges == ((0, 1), (0, 2), (1, 2))
    assert SensorGraph.star(4).edges == ((0, 1), (0, 2), (0, 3))
    assert SensorGraph.star(3, center=2).edges == ((0, 2), (1, 2))
    assert SensorGraph.path(4).edges == ((0, 1), (1, 2), (2, 3))


def test_graph_canonicalizes_and_validates():
    g = SensorGraph(3, ((2, 0), (1, 2), (0, 2)))
    assert g.edges == ((0, 2), (1, 2))
    assert g.has_edge(2, 1) and not g.has_edge(0, 1)
    assert g.edge_index(2, 1) == 1
    with pytest.raises(ValueError):
        SensorGraph(3, ((0, 1),))
    with pytest.raises(ValueError):
        SensorGraph(2, ((1, 1),))
    with pytest.raises(ValueError):
        SensorGraph(2, ((0, 2),))


def test_shortest_path():
    g = SensorGraph.path(5)
    assert g.shortest_path(0, 4) == [0, 1, 2, 3, 4]
    assert g.shortest_path(3, 1) == [3, 2, 1]
    assert SensorGraph.star(4).shortest_path(2, 3) == [2, 0, 3]
    assert g.shortest_path(2, 2) == [2]


def test_threshold_quantize_rules():
    z = np.array([[10.0, 10.0], [0.5, 1.0]])
    rec = threshold_quantize(z, [1.0, 1.0])
    assert rec.x_bits.tolist() == [[1, 1], [0, 1]]
    with pytest.raises(ZeroThreshold):
        threshold_quantize(z, [1.0, 0.0])


def test_threshold_frequency_matches_normal_tail():
    z = np.random.default_rng(0).standard_normal((1, 100_000))
    mean = threshold_quantize(z, [1.0]).x_bits.mean()
    p = 1 - std_normal_cdf(1.0)
    assert abs(mean - p) <= 3 * np.sqrt(p * (1 - p) / z.shape[1])


def test_sign_and_predominance_bits():
    z = np.array([[1.0, -3.0, 0.0, -2.0], [-2.0, 1.0, 0.0, 2.0]])
    rec = sign_and_predominance(z, SensorGraph.complete(2))
    assert rec.x_bits.tolist() == [[1, 0, 1, 0], [0, 1, 1, 1]]
    assert rec.q_bits.tolist() == [[0, 1, 1, 1]]
    assert rec.q_row(1, 0).tolist() == [1, 0, 0, 0]
    assert rec.thresholds is None


def test_star_graph_row_count():
    z = np.random.default_rng(1).standard_normal((4, 50))
    rec = sign_and_predominance(z, SensorGraph.star(4))
    assert rec.q_bits.shape == (3, 50)


def test_iid_predominance_is_fair():
    z = np.random.default_rng(2).standard_normal((2, 100_000))
    q = sign_and_predominance(z, SensorGraph.complete(2)).q_bits.mean()
    assert abs(q - 0.5) <= 3 * 0.5 / np.sqrt(z.shape[1])


def test_record_validation():
    with pytest.raises(ValueError):
        BinaryRecord(x_bits=np.array([[0, 2]]))
    with pytest.raises(ValueError):
        BinaryRecord(x_bits=np.zeros((2, 4)), q_bits=np.zeros((2, 4)), edges=((0, 1),))
    with pytest.raises(ZeroThreshold):
        BinaryRecord(x_bits=np.zeros((1, 3)), thresholds=[0.0])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(1, 70), st.booleans(), st.integers(0, 1000))
def test_format_round_trip(d, T, thresholded, seed):
    z = np.random.default_rng(seed).standard_normal((d, T))
    if thresholded:
        rec = threshold_quantize(z, np.linspace(-1.0, 1.5, d) + 0.123456789)
    else:
        rec = sign_and_predominance(z, SensorGraph.complete(d))
    back = loads_record(dumps_record(rec))
    assert np.array_equal(back.x_bits, rec.x_bits)
    assert np.array_equal(back.q_bits, rec.q_bits)
    assert back.edges == rec.edges
    if thresholded:
        assert np.array_equal(back.thresholds, rec.thresholds)
    else:
        assert back.thresholds is None


def test_format_file_io(tmp_path):
    rec = sign_and_predominance(np.random.default_rng(3).standard_normal((3, 17)), SensorGraph.path(3))
    write_record(rec, tmp_path / "r.bits")
    data = (tmp_path / "r.bits").read_bytes()
    assert data.startswith(b"BITVAR1 3 17 2 0\n0-1 1-2\n\n")
    assert len(data.split(b"\n", 3)[3]) == 5 * 3
    assert np.array_equal(read_record(tmp_path / "r.bits").q_bits, rec.q_bits)


@pytest.mark.parametrize("blob", [
    b"",
    b"BITVAR2 1 8 0 0\n\n\n\x00",
    b"BITVAR1 1 8 0 0\n\n\n",
    b"BITVAR1 1 8 0 0\n\n\n\x00\x00",
    b"BITVAR1 2 8 1 0\n\n\n\x00\x00\x00",
    b"BITVAR1 1 8 0 1\n\nabc\n\x00",
    b"BITVAR1 x 8 0 0\n\n\n\x00",
])
def test_format_errors(blob):
    with pytest.raises(FormatError):
        loads_record(blob)
