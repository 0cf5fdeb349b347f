import pytest

from lactate_lab import LactatePoint, AthleteTest, SynthConfig, generate_population


@pytest.fixture(scope="session")
def population():
    """50 athletes, 8 points each, seed 42."""
    return generate_population(SynthConfig(n_athletes=50, points_per_athlete=8, seed=42))


@pytest.fixture(scope="session")
def population10():
    return generate_population(SynthConfig(n_athletes=50, points_per_athlete=10, seed=7))


@pytest.fixture
def well_formed():
    speeds = [9.0, 10.5, 12.0, 13.5, 14.5, 15.5, 16.5, 17.5]
    lactate = [1.1, 1.2, 1.4, 1.9, 2.6, 3.8, 5.5, 8.0]
    return AthleteTest("w1", tuple(LactatePoint(s, c) for s, c in zip(speeds, lactate)), pts=17.5)
