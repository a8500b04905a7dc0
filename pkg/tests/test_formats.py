import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evhats.events import Event, SensorGeometry, validate_stream
from evhats.featfile import labels_path, read_features, write_features
from evhats.formats import (
    MalformedHeader, TruncatedRecord, decode_csv, decode_nmnist, encode_canonical, read_events,
    write_events,
)
from conftest import random_stream


def test_canonical_roundtrip_three(tmp_path):
    s = validate_stream([(0, 0, 1, 1), (1, 2, 5, -1), (3, 3, 5, 1)], SensorGeometry(4, 4))
    write_events(s, tmp_path / "a.evt")
    assert read_events(tmp_path / "a.evt") == s


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 300))
def test_roundtrips(tmp_path_factory, seed, n):
    s = random_stream(np.random.default_rng(seed), width=40, height=30, n=n)
    d = tmp_path_factory.mktemp("rt")
    write_events(s, d / "a.evt")
    assert read_events(d / "a.evt") == s
    write_events(s, d / "a.csv", "csv")
    assert read_events(d / "a.csv", "csv", geometry=s.geometry) == s


def test_csv_line():
    s = decode_csv("x,y,t,p\n3,4,100,-1\n")
    assert s[0] == Event(3, 4, 100, -1)
    assert s.geometry == SensorGeometry(4, 5)


@pytest.mark.parametrize("text,err", [
    ("a,b,c\n1,2,3\n", MalformedHeader),
    ("x,y,t,p\n1,2,3\n", TruncatedRecord),
    ("x,y,t,p\n1,2,q,1\n", TruncatedRecord),
])
def test_csv_errors(text, err):
    with pytest.raises(err):
        decode_csv(text)


def test_nmnist_hand_record():
    s = decode_nmnist(bytes([0x05, 0x07, 0x80, 0x00, 0x64]))
    assert list(s) == [Event(5, 7, 100, 1)]
    s = decode_nmnist(bytes([0x01, 0x02, 0x01, 0x00, 0x00]))
    assert list(s) == [Event(1, 2, 65536, -1)]
    with pytest.raises(TruncatedRecord):
        decode_nmnist(b"\x00" * 7)


def test_canonical_errors(tmp_path):
    s = validate_stream([(0, 0, 1, 1)], SensorGeometry(2, 2))
    data = encode_canonical(s)
    cases = {"short": data[:10], "magic": b"X" + data[1:], "trunc": data[:-1], "extra": data + b"\0"}
    expected = {"short": MalformedHeader, "magic": MalformedHeader, "trunc": TruncatedRecord,
                "extra": MalformedHeader}
    for name, blob in cases.items():
        (tmp_path / name).write_bytes(blob)
        with pytest.raises(expected[name]):
            read_events(tmp_path / name)


def test_feature_file_roundtrip(tmp_path, rng):
    X = rng.normal(size=(7, 13))
    y = rng.integers(0, 3, 7)
    write_features(tmp_path / "f.ftr", X, y)
    X2, y2 = read_features(tmp_path / "f.ftr")
    assert np.array_equal(X, X2) and np.array_equal(y, y2)
    raw = (tmp_path / "f.ftr").read_bytes()
    assert raw[:8] == b"HATSFTR1" and len(raw) == 16 + 7 * 13 * 8
    write_features(tmp_path / "g.ftr", X)
    assert read_features(tmp_path / "g.ftr")[1] is None
    (tmp_path / "h.ftr").write_bytes(raw[:-3])
    with pytest.raises(TruncatedRecord):
        read_features(tmp_path / "h.ftr")
    assert labels_path(tmp_path / "f.ftr").endswith(".labels")
