import numpy as np
import pytest

from lactate_lab import (
    ConfigError,
    SynthConfig,
    dmax_for_test,
    generate_population,
    speed_reserve,
    transform_lt,
    validate_test,
)
from lactate_lab.io import tests_to_csv as csv_text


def _percents(pop):
    out = []
    for t in pop:
        _, est = dmax_for_test(t)
        out.append(transform_lt(est.lt_speed, speed_reserve(t.pts, t.initial_speed)))
    return np.array(out)


def test_noise_free_hits_target():
    pop = generate_population(SynthConfig(n_athletes=20, lt_percent_mean=60.0, lt_percent_sd=0.0, curve_noise_sd=0.0, seed=1))
    assert np.all(np.abs(_percents(pop) - 60.0) < 0.5)


def test_byte_identical():
    cfg = SynthConfig(n_athletes=10, seed=5)
    assert csv_text(generate_population(cfg)) == csv_text(generate_population(cfg))


def test_seed_matters():
    a = csv_text(generate_population(SynthConfig(n_athletes=5, seed=1)))
    b = csv_text(generate_population(SynthConfig(n_athletes=5, seed=2)))
    assert a != b


def test_prefix_stable():
    # per-athlete streams: a larger population extends a smaller one
    small = generate_population(SynthConfig(n_athletes=5, seed=3))
    big = generate_population(SynthConfig(n_athletes=8, seed=3))
    assert small == big[:5]


def test_shape_and_validity(population):
    assert len(population) == 50
    assert sum(len(t.points) for t in population) == 400
    assert len({t.athlete_id for t in population}) == 50
    for t in population:
        assert validate_test(t) == []
        assert t.initial_speed == 9.0
        assert 14.5 <= t.pts <= 19.5
        assert t.speeds[0] == 9.0 and t.speeds[-1] == t.pts
        assert all(c > 0 for c in t.concentrations)


def test_mean_near_target(population):
    pct = _percents(population)
    assert abs(pct.mean() - 59.6) < 2 * max(pct.std(), 2.5) / np.sqrt(len(pct))


@pytest.mark.parametrize(
    "kw",
    [
        {"n_athletes": 0},
        {"points_per_athlete": 3},
        {"lt_percent_sd": -1},
        {"curve_noise_sd": -0.1},
        {"pts_range": (8.0, 12.0)},
        {"pts_range": (14.5, 14.6), "points_per_athlete": 12},
        {"baseline_lactate": 0.0},
        {"peak_lactate_range": (11.0, 6.0)},
        {"seed": -1},
    ],
)
def test_invalid_config(kw):
    with pytest.raises(ConfigError):
        SynthConfig(**kw)
