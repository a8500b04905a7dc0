import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evhats.events import Event, EventStream, SensorGeometry, transform, validate_stream
from evhats.surface import (
    PixelLastTime, SurfaceParams, brute_force_surface, last_event_surface, local_memory_surface,
    surfaces,
)
from conftest import random_stream

G = SensorGeometry(16, 16)


def loop_surface(stream, i, rho, tau, delta_t):
    """Second scan written independently: offsets first, then events."""
    e = stream[i]
    side = 2 * rho + 1
    out = [[[0.0, 0.0] for _ in range(side)] for _ in range(side)]
    q = 1 if e.p == 1 else 0
    for zy in range(-rho, rho + 1):
        for zx in range(-rho, rho + 1):
            total = 0.0
            for j in range(i):
                ej = stream[j]
                if ej.x == e.x + zx and ej.y == e.y + zy and ej.p == e.p \
                        and e.t - delta_t <= ej.t < e.t:
                    total += math.exp(-(e.t - ej.t) / tau)
            out[zy + rho][zx + rho][q] = total
    return np.array(out)


def last_scan(stream, i, rho, tau):
    e = stream[i]
    out = np.zeros((2 * rho + 1, 2 * rho + 1, 2))
    latest = {}
    for j in range(i):
        ej = stream[j]
        latest[(ej.x, ej.y, ej.p)] = ej.t
    for (x, y, p), t in latest.items():
        if p == e.p and abs(x - e.x) <= rho and abs(y - e.y) <= rho:
            out[y - e.y + rho, x - e.x + rho, 1 if p == 1 else 0] = math.exp(-(e.t - t) / tau)
    return out


def test_params_validation():
    for bad in [dict(rho=-1), dict(tau=0), dict(delta_t=0)]:
        with pytest.raises(ValueError):
            SurfaceParams(**bad)


def test_last_event_empty_state():
    p = SurfaceParams(2, 100, 1000)
    s = last_event_surface(Event(5, 5, 10, 1), PixelLastTime(G), p)
    assert s.shape == (5, 5, 2) and not s.any()


def test_last_event_single_term():
    p = SurfaceParams(2, 100, 1000)
    state = PixelLastTime(G)
    state.update(Event(5, 5, 0, 1))
    s = last_event_surface(Event(5, 5, 100, 1), state, p)
    assert s[2, 2, 1] == pytest.approx(0.3678794, abs=1e-7)
    assert np.count_nonzero(s) == 1


def test_last_event_matches_scan(rng):
    stream = random_stream(rng, n=200)
    p = SurfaceParams(3, 5000, 1e6)
    got = surfaces(stream, p, "last", engine="reference")
    assert np.allclose(got[-1], last_scan(stream, len(stream) - 1, 3, 5000), atol=1e-12)
    compiled = surfaces(stream, p, "last")
    assert np.allclose(compiled, got, atol=1e-12)


def test_local_memory_empty():
    s = local_memory_surface(Event(1, 1, 10, 1), [], SurfaceParams(1, 10, 100))
    assert not s.any()


def test_local_memory_two_terms():
    p = SurfaceParams(1, 100, 1000)
    mem = [(3, 3, 0, -1), (3, 3, 100, -1)]
    s = local_memory_surface(Event(3, 3, 200, -1), mem, p)
    assert s[1, 1, 0] == pytest.approx(0.5032147, abs=1e-7)
    assert np.count_nonzero(s) == 1


def test_brute_force_first_event_and_opposite_polarity():
    p = SurfaceParams(2, 100, 1000)
    s = validate_stream([(1, 1, 0, 1), (1, 1, 5, -1)], G)
    assert not brute_force_surface(s[0], s, 0, p).any()
    assert not brute_force_surface(s[1], s, 1, p).any()


def test_memory_surfaces_match_brute_force(rng):
    stream = random_stream(rng, n=500)
    p = SurfaceParams(2, 3000, 4000)
    ref = surfaces(stream, p, engine="reference")
    assert np.allclose(surfaces(stream, p), ref, atol=1e-9, rtol=0)
    for i in range(len(stream)):
        mem = [tuple(e) for e in stream][:i]
        assert np.allclose(local_memory_surface(stream[i], mem, p), ref[i], atol=1e-9, rtol=0)


def test_brute_force_matches_loop_scan(rng):
    stream = random_stream(rng, width=8, height=8, n=120, t_max=3000)
    for i in range(len(stream)):
        got = brute_force_surface(stream[i], stream, i, SurfaceParams(2, 700, 1500))
        assert np.allclose(got, loop_surface(stream, i, 2, 700, 1500), atol=1e-12, rtol=0)


def test_ties_excluded():
    s = validate_stream([(1, 1, 10, 1), (1, 1, 10, 1)], G)
    assert not surfaces(s, SurfaceParams(1, 100, 100))[1].any()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 10**9))
def test_time_translation_invariance(seed, c):
    stream = random_stream(np.random.default_rng(seed), n=150)
    p = SurfaceParams(2, 2000, 5000)
    for kind in ("memory", "last"):
        assert np.array_equal(surfaces(stream, p, kind), surfaces(transform(stream, dt=c), p, kind))


def test_monotone_decay():
    p = SurfaceParams(1, 500, 1e7)
    prev = np.inf
    for age in range(1, 5000, 97):
        s = validate_stream([(2, 2, 0, 1), (3, 2, age, 1)], G)
        v = surfaces(s, p)[1][1, 0, 1]
        assert v < prev
        prev = v


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_counting_limit(seed):
    stream = random_stream(np.random.default_rng(seed), width=8, height=8, n=200, t_max=100_000)
    p = SurfaceParams(2, 1e12, 30_000)
    counts = surfaces(stream, SurfaceParams(2, float("inf"), 30_000), engine="reference")
    got = surfaces(stream, p)
    assert np.allclose(got, counts, rtol=1e-6, atol=0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_window_limit(seed):
    rng = np.random.default_rng(seed)
    n = 100
    t = np.cumsum(rng.integers(2, 50, n))
    s = EventStream.from_arrays(G, rng.integers(0, 4, n), rng.integers(0, 4, n), t, rng.choice([-1, 1], n))
    assert not surfaces(s, SurfaceParams(3, 100, 1)).any()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_polarity_separation_and_bounds(seed):
    stream = random_stream(np.random.default_rng(seed), width=6, height=6, n=300, t_max=5000)
    p = SurfaceParams(2, 800, 2000)
    surf = surfaces(stream, p)
    counts = surfaces(stream, SurfaceParams(2, float("inf"), 2000), engine="reference")
    for i, e in enumerate(stream):
        assert surf[i][:, :, 0 if e.p == 1 else 1].sum() == 0.0
    assert (surf >= 0).all() and (surf <= counts + 1e-12).all()
