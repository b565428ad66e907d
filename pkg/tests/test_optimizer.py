"""Illumination optimizer tests: embedding, frozen objective, multistart."""

import numpy as np
import pytest

from bsdof.environment import EnvironmentSpec, synth_environment
from bsdof.errors import DegenerateInputError
from bsdof.loads import LoadConstraint
from bsdof.metrics import bs_eemdof_point
from bsdof.network import extract_blocks
from bsdof.optimize import (
    OptimizationConfig,
    embed,
    mean_dof_objective,
    optimize_illumination,
    project,
    sample_load_set,
)
from bsdof.sampling import sample_random_illumination
from bsdof.streams import substream

UNI = LoadConstraint.uni()
PIN = LoadConstraint.pin()


def system_for(n_t, n_r, n_s, seed, eta=0.9):
    return synth_environment(EnvironmentSpec(n_t, n_r, n_s, eta, 1.0, seed=seed))


def test_embedding_round_trip():
    x = sample_random_illumination(3, substream(80))
    assert np.allclose(project(embed(x)), x, rtol=0.0, atol=1e-12)
    # projection quotients out positive scale
    assert np.allclose(project(2.0 * embed(x)), x, rtol=0.0, atol=1e-12)
    v = substream(81).standard_normal(10)
    assert abs(np.linalg.norm(project(v)) - 1.0) < 1e-12


def test_projection_rejects_degenerate_input():
    with pytest.raises(DegenerateInputError):
        project(np.zeros(6))
    with pytest.raises(ValueError):
        project(np.ones(5))


def test_objective_single_member_matches_point_metric():
    system = system_for(2, 2, 8, seed=20)
    blocks = extract_blocks(system)
    load_set = sample_load_set(PIN, 8, 1, seed=21, s_ss=blocks.s_ss)
    x = sample_random_illumination(2, substream(22))
    mean_value = mean_dof_objective(system, x, PIN, load_set)
    point_value = bs_eemdof_point(blocks, load_set[0], x).m
    assert abs(mean_value - point_value) < 1e-12


def test_objective_is_the_average_of_point_metrics():
    system = system_for(2, 2, 16, seed=23)
    blocks = extract_blocks(system)
    load_set = sample_load_set(PIN, 16, 1500, seed=24, s_ss=blocks.s_ss)
    x = sample_random_illumination(2, substream(25))
    mean_value = mean_dof_objective(system, x, PIN, load_set)
    oracle = np.mean([bs_eemdof_point(blocks, r, x).m for r in load_set])
    assert abs(mean_value - oracle) < 1e-12


def test_objective_ignores_global_phase():
    system = system_for(3, 2, 8, seed=26)
    blocks = extract_blocks(system)
    load_set = sample_load_set(UNI, 8, 64, seed=27, s_ss=blocks.s_ss)
    x = sample_random_illumination(3, substream(28))
    base = mean_dof_objective(system, x, UNI, load_set)
    rotated = mean_dof_objective(system, x * np.exp(0.7j), UNI, load_set)
    assert abs(base - rotated) < 1e-10


def test_objective_rejects_active_loads():
    system = system_for(2, 2, 4, seed=29)
    load_set = np.full((3, 4), 1.2 + 0.0j)
    x = sample_random_illumination(2, substream(30))
    with pytest.raises(ValueError):
        mean_dof_objective(system, x, PIN, load_set)


def test_load_set_is_deterministic_per_member():
    first = sample_load_set(PIN, 8, 40, seed=31)
    again = sample_load_set(PIN, 8, 40, seed=31)
    assert np.array_equal(first, again)
    # member streams are keyed by index, so a shorter set is a prefix
    prefix = sample_load_set(PIN, 8, 10, seed=31)
    assert np.array_equal(first[:10], prefix)
    assert not np.array_equal(first, sample_load_set(PIN, 8, 40, seed=32))


def test_load_set_redraws_members_that_resonate():
    # rank-1 coupling along the flat vector: all-ON is the one singular state
    u = np.ones(8) / np.sqrt(8.0)
    s_ss = (1.0 - 1e-13) * np.outer(u, u.conj())
    members = sample_load_set(LoadConstraint.pm(), 8, 200, seed=33, s_ss=s_ss)
    assert not np.any(np.all(members == 1.0 + 0.0j, axis=1))
    unguarded = sample_load_set(LoadConstraint.pm(), 8, 200, seed=33)
    assert np.any(np.all(unguarded == 1.0 + 0.0j, axis=1))


def test_single_input_problem_is_flat():
    """With one tx port the sphere is a phase circle and the objective is
    constant on it, so the optimizer must return the plain frozen mean."""
    system = system_for(1, 2, 8, seed=34)
    blocks = extract_blocks(system)
    config = OptimizationConfig(
        direction="MAX", n_objective_samples=300, n_starts=2, max_iterations=200, seed=35
    )
    result = optimize_illumination(system, UNI, config)
    load_set = sample_load_set(UNI, 8, 300, seed=35, s_ss=blocks.s_ss)
    flat_value = mean_dof_objective(system, np.array([1.0 + 0.0j]), UNI, load_set)
    assert abs(result.best_objective - flat_value) < 1e-9


def test_multistart_brackets_and_reproduces():
    system = system_for(2, 2, 8, seed=36)
    blocks = extract_blocks(system)
    common = dict(n_objective_samples=200, n_starts=2, max_iterations=400, seed=37)
    top = optimize_illumination(system, UNI, OptimizationConfig(direction="MAX", **common))
    bottom = optimize_illumination(system, UNI, OptimizationConfig(direction="MIN", **common))
    assert top.best_objective >= bottom.best_objective
    assert len(top.per_start_trace) == 2
    assert top.objective_evaluations > 0
    for start, final, n_iter in top.per_start_trace:
        assert start in (0, 1)
        assert np.isfinite(final)
        assert n_iter >= 1

    again = optimize_illumination(system, UNI, OptimizationConfig(direction="MAX", **common))
    assert np.array_equal(top.best_x, again.best_x)
    assert top.best_objective == again.best_objective

    load_set = sample_load_set(UNI, 8, 200, seed=37, s_ss=blocks.s_ss)
    replay = mean_dof_objective(system, top.best_x, UNI, load_set)
    assert abs(replay - top.best_objective) < 1e-12


def test_fresh_noise_per_evaluation_smoke():
    system = system_for(1, 2, 4, seed=38)
    config = OptimizationConfig(
        direction="MAX",
        n_objective_samples=50,
        n_starts=1,
        max_iterations=30,
        seed=39,
        redraw_per_evaluation=True,
    )
    result = optimize_illumination(system, PIN, config)
    assert np.isfinite(result.best_objective)
    assert 1.0 - 1e-9 <= result.best_objective <= 2.0 + 1e-9
    again = optimize_illumination(system, PIN, config)
    assert result.best_objective == again.best_objective


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizationConfig(direction="UP")
    with pytest.raises(ValueError):
        OptimizationConfig(n_starts=0)
    with pytest.raises(ValueError):
        OptimizationConfig(x_tolerance=0.0)
    with pytest.raises(ValueError):
        OptimizationConfig(seed=-1)
