"""Shared fixtures: the reference maps, tables, drivings and sampled paths."""

import pytest

from src.circle_numerics import CircleGrid
from src.cocycle import sample_path
from src.presets import (
    attracting_square,
    constant_table,
    expanding_square,
    mixed_cubic,
    rotation_table,
    sigma1,
    sigma2,
    two_map_table,
)


@pytest.fixture
def T0():
    return expanding_square()


@pytest.fixture
def T1():
    return attracting_square()


@pytest.fixture
def T_mixed():
    return mixed_cubic()


@pytest.fixture
def table():
    return two_map_table()


@pytest.fixture
def bernoulli():
    return sigma1(0.2)


@pytest.fixture
def rotation():
    return sigma2()


@pytest.fixture
def grid():
    return CircleGrid(4096)


@pytest.fixture
def squares_path():
    """Constant z² cocycle: every map fixes 0."""
    table, driving = constant_table(expanding_square())
    return sample_path(driving, table, seed=7, n_back=10_000, n_fwd=2_000)


@pytest.fixture
def t1_path():
    table, driving = constant_table(attracting_square())
    return sample_path(driving, table, seed=7, n_back=10_000, n_fwd=200)


@pytest.fixture
def mixed_path(table, bernoulli):
    return sample_path(bernoulli, table, seed=11, n_back=10_000, n_fwd=200)


@pytest.fixture
def rotations():
    return rotation_table()
