import numpy as np
import pytest

from evhats.events import SensorGeometry, validate_stream
from evhats.rng import SplitMix64, derive_seed
from evhats.synth import NoiseSpec, SceneSpec, generate_scene, inject_noise, random_scene, two_class_dataset


def test_splitmix_reference_values():
    # published first outputs of SplitMix64 seeded with 0
    assert SplitMix64(0).next_u64(2).tolist() == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4]


def test_rng_ranges_and_counter():
    r = SplitMix64(9)
    u = r.random(10_000)
    assert (u >= 0).all() and (u < 1).all() and abs(u.mean() - 0.5) < 0.02
    ints = r.integers(3, 7, 1000)
    assert set(ints.tolist()) == {3, 4, 5, 6}
    a, b = SplitMix64(5), SplitMix64(5)
    assert np.array_equal(np.r_[a.random(3), a.random(4)], b.random(7))
    assert derive_seed(1, 2) != derive_seed(1, 3) and derive_seed(1, 2) == derive_seed(1, 2)


def test_scene_hand_case():
    spec = SceneSpec(SensorGeometry(4, 1), "vertical-edge", velocity=1000.0, duration=4000)
    s = generate_scene(spec)
    assert s.t.tolist() == [0, 1000, 2000, 3000]
    assert s.x.tolist() == [0, 1, 2, 3] and (s.p == 1).all()


def test_scene_never_enters():
    spec = SceneSpec(SensorGeometry(8, 8), velocity=-100.0, offset=-10.0, duration=1000)
    assert len(generate_scene(spec)) == 0


def test_scene_validation():
    with pytest.raises(ValueError):
        SceneSpec(SensorGeometry(2, 2), velocity=0)
    with pytest.raises(ValueError):
        SceneSpec(SensorGeometry(2, 2), duration=0)
    with pytest.raises(ValueError):
        NoiseSpec(-1)


@pytest.mark.parametrize("pattern", ["vertical-edge", "horizontal-edge", "diagonal-edge"])
def test_scene_determinism_and_validity(pattern):
    g = SensorGeometry(20, 12)
    spec = random_scene(pattern, g, 42, events_per_crossing=3)
    a, b = generate_scene(spec), generate_scene(spec)
    assert a == b and len(a) > 0
    validate_stream([tuple(e) for e in a], g)
    assert set(a.p.tolist()) == {-1, 1}


def test_noise_zero_rate_identity():
    s = generate_scene(random_scene("vertical-edge", SensorGeometry(16, 16), 1))
    assert inject_noise(s, NoiseSpec(0.0, 3)) == s


def test_noise_preserves_originals():
    s = generate_scene(random_scene("vertical-edge", SensorGeometry(16, 16), 1))
    noisy, mask = inject_noise(s, NoiseSpec(20_000.0, 3), return_mask=True)
    validate_stream([tuple(e) for e in noisy], s.geometry)
    kept = [e for e, m in zip(noisy, mask) if m]
    assert kept == list(s)
    assert noisy.t[0] >= s.t[0] and noisy.t[-1] <= s.t[-1]


def test_noise_count_poisson():
    g = SensorGeometry(16, 16)
    base = validate_stream([(0, 0, 0, 1), (0, 0, 200_000, 1)], g)
    rate, span = 10_000.0, 0.2
    counts = np.array([len(inject_noise(base, NoiseSpec(rate, seed))) - 2 for seed in range(100)])
    expected = rate * span
    assert abs(counts.mean() - expected) <= 5 * np.sqrt(expected / 100)
    assert abs(counts.var() / expected - 1) < 0.5


def test_two_class_dataset():
    d = two_class_dataset(1)
    assert [s.label for s in d] == [0, 1]
    a, b = two_class_dataset(3, seed=5), two_class_dataset(3, seed=5)
    assert all(x == y for x, y in zip(a, b))
    assert two_class_dataset(3, seed=6)[0] != a[0]
    with pytest.raises(ValueError):
        two_class_dataset(0)
