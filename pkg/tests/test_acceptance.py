"""Acceptance gate: one test per criterion, one scoreboard line each.

Every test prints "criterion NN: PASS/FAIL | detail" before asserting, so a
full-suite run with -rA (or -s) shows the complete scoreboard including the
measured numbers behind each verdict.
"""

import functools
import time

import numpy as np

from bsdof.cli import jacobian_validation_sweep, main
from bsdof.environment import (
    EnvironmentSpec,
    environment_ladder,
    synth_environment,
    zero_mc,
)
from bsdof.fd import ChannelMap, discrete_toggle_jacobian, linear_map_fd_jacobian
from bsdof.loads import LoadConstraint, sample_loads
from bsdof.metrics import participation_from_singular_values, participation_number
from bsdof.network import (
    coupling_resolvent,
    extract_blocks,
    save_system,
    woodbury_channel_update,
)
from bsdof.optimize import OptimizationConfig, optimize_illumination
from bsdof.sampling import (
    IlluminationPolicy,
    sample_distribution,
    sample_random_illumination,
)
from bsdof.streams import standard_complex_gaussian, substream

PIN = LoadConstraint.pin()
UNI = LoadConstraint.uni()


def report(number, ok, detail):
    print(f"criterion {number:02d}: {'PASS' if ok else 'FAIL'} | {detail}")


@functools.lru_cache(maxsize=1)
def validation_sweep():
    started = time.perf_counter()
    outcome = jacobian_validation_sweep(trials=100, seed=0)
    return outcome, time.perf_counter() - started


def test_criterion_01_jacobian_oracle_agreement():
    outcome, elapsed = validation_sweep()
    worst = outcome["max_fd_relative_error"]
    ok = worst < 1e-6 and elapsed < 10.0
    report(1, ok, f"max relative Frobenius error {worst:.3e} over 100 systems, {elapsed:.2f}s")
    assert worst < 1e-6
    assert elapsed < 10.0


def test_criterion_02_column_space_containment():
    outcome, _ = validation_sweep()
    worst = outcome["max_column_space_residual"]
    ok = worst < 1e-10
    report(2, ok, f"max column-space residual {worst:.3e} over 100 systems")
    assert worst < 1e-10


def test_criterion_03_participation_bounds_and_invariances():
    gen = substream(300)
    lowest, highest_excess = np.inf, -np.inf
    for _ in range(10_000):
        rows = 1 + int(gen.random() * 6)
        cols = 1 + int(gen.random() * 6)
        m = participation_number(standard_complex_gaussian(gen, (rows, cols))).m
        lowest = min(lowest, m)
        highest_excess = max(highest_excess, m - min(rows, cols))

    base = standard_complex_gaussian(substream(301), (3, 5))
    base_m = participation_number(base).m
    sgen = substream(302)
    scale_dev = 0.0
    for _ in range(100):
        c = 10.0 ** (200.0 * sgen.random() - 100.0) * np.exp(2j * np.pi * sgen.random())
        scale_dev = max(scale_dev, abs(participation_number(c * base).m - base_m))

    ugen = substream(303)
    unitary_dev = 0.0
    for _ in range(20):
        q_left = np.linalg.qr(standard_complex_gaussian(ugen, (3, 3)))[0]
        q_right = np.linalg.qr(standard_complex_gaussian(ugen, (5, 5)))[0]
        rotated_m = participation_number(q_left @ base @ q_right).m
        unitary_dev = max(unitary_dev, abs(rotated_m - base_m))

    flat = participation_from_singular_values((1.0, 1.0, 1.0, 1.0)).m
    pair_dev = abs(participation_from_singular_values((2.0, 1.0)).m - 25.0 / 17.0)

    ok = (
        lowest >= 1.0
        and highest_excess <= 0.0
        and scale_dev < 1e-12
        and unitary_dev < 1e-10
        and flat == 4.0
        and pair_dev < 1e-12
    )
    report(
        3,
        ok,
        f"bounds [{lowest:.3f}, cap{highest_excess:+.1e}] on 1e4 draws; "
        f"scale dev {scale_dev:.1e}, unitary dev {unitary_dev:.1e}, "
        f"flat {flat}, (2,1) dev {pair_dev:.1e}",
    )
    assert lowest >= 1.0
    assert highest_excess <= 0.0
    assert scale_dev < 1e-12
    assert unitary_dev < 1e-10
    assert flat == 4.0
    assert pair_dev < 1e-12


def test_criterion_04_no_coupling_collapse():
    started = time.perf_counter()
    system = zero_mc(synth_environment(EnvironmentSpec(3, 4, 16, 0.9, 1.0, seed=0)))
    x = sample_random_illumination(3, substream(7, 0))
    fixed = sample_distribution(system, IlluminationPolicy.fixed(x), PIN, 10_000, seed=13)
    rand = sample_distribution(system, IlluminationPolicy.rand(), PIN, 10_000, seed=14)
    elapsed = time.perf_counter() - started
    ok = fixed.std < 1e-12 and rand.std > 0.0 and elapsed < 60.0
    report(
        4,
        ok,
        f"fixed-x std {fixed.std:.1e}, random-x std {rand.std:.4f}, {elapsed:.2f}s",
    )
    assert fixed.std < 1e-12
    assert rand.std > 0.0
    assert elapsed < 60.0


def test_criterion_05_fixed_channel_jacobian_is_the_channel():
    h = standard_complex_gaussian(substream(2), (4, 3))
    gen = substream(304)
    worst = 0.0
    for _ in range(10):
        x0 = standard_complex_gaussian(gen, 3)
        jac = linear_map_fd_jacobian(h, x0)
        worst = max(worst, np.linalg.norm(jac - h) / np.linalg.norm(h))
    ok = worst < 1e-10
    report(5, ok, f"max relative error {worst:.3e} over 10 expansion points")
    assert worst < 1e-10


def test_criterion_06_control_vs_reflection_participation():
    worst = 0.0
    for t in range(20):
        gen = substream(6, t)
        u = gen.random(3)
        n_t = 1 + int(u[0] * 3)
        n_r = 1 + int(u[1] * 4)
        n_s = 2 + int(u[2] * 11)
        system = synth_environment(EnvironmentSpec(n_t, n_r, n_s, 0.9, 1.0, seed=600 + t))
        blocks = extract_blocks(system)
        r0 = sample_loads(PIN, n_s, gen)
        x = sample_random_illumination(n_t, gen)
        channel_map = ChannelMap.from_blocks(blocks)
        by_controls = discrete_toggle_jacobian(channel_map, r0, x, PIN, wrt="controls")
        by_reflection = discrete_toggle_jacobian(channel_map, r0, x, PIN, wrt="reflection")
        m_controls = participation_from_singular_values(by_controls.singular_values).m
        m_reflection = participation_from_singular_values(by_reflection.singular_values).m
        worst = max(worst, abs(m_controls - m_reflection))
    ok = worst < 1e-12
    report(6, ok, f"max participation difference {worst:.3e} over 20 systems")
    assert worst < 1e-12


def test_criterion_07_illumination_optimization_ordering():
    started = time.perf_counter()
    rows = []
    for env_seed in range(5):
        system = synth_environment(EnvironmentSpec(3, 4, 16, 0.9, 1.0, seed=env_seed))
        means = {}
        for direction in ("MIN", "MAX"):
            config = OptimizationConfig(
                direction=direction, n_objective_samples=1500, n_starts=3, seed=11
            )
            result = optimize_illumination(system, UNI, config)
            dist = sample_distribution(
                system, IlluminationPolicy.fixed(result.best_x), UNI, 10_000, seed=12
            )
            means[direction] = dist.mean
        rand = sample_distribution(system, IlluminationPolicy.rand(), UNI, 10_000, seed=12)
        rows.append((env_seed, means["MIN"], rand.mean, means["MAX"]))
    elapsed = time.perf_counter() - started
    ok = elapsed < 900.0 and all(
        low + 0.05 <= mid <= high - 0.05 for _, low, mid, high in rows
    )
    summary = "; ".join(f"s{s}: {lo:.3f}/{mid:.3f}/{hi:.3f}" for s, lo, mid, hi in rows)
    report(7, ok, f"MIN/RAND/MAX means {summary}; {elapsed:.1f}s")
    for env_seed, low, mid, high in rows:
        assert low + 0.05 <= mid, f"seed {env_seed}: RAND {mid:.4f} too close to MIN {low:.4f}"
        assert mid <= high - 0.05, f"seed {env_seed}: RAND {mid:.4f} too close to MAX {high:.4f}"
    assert elapsed < 900.0


def test_criterion_08_scattering_ladder_trend():
    started = time.perf_counter()
    strengths = (0.95, 0.7, 0.4, 0.1)
    base = EnvironmentSpec(3, 4, 32, 0.95, 1.0, seed=0)
    rungs = environment_ladder(base, strengths)
    n = 2000

    means, errors = [], []
    for rung in rungs:
        dist = sample_distribution(rung, IlluminationPolicy.rand(), PIN, n, seed=5)
        means.append(dist.mean)
        errors.append(dist.std / np.sqrt(n))

    x = sample_random_illumination(3, substream(7, 0))
    stds = []
    for rung in rungs:
        dist = sample_distribution(rung, IlluminationPolicy.fixed(x), PIN, n, seed=7)
        stds.append(dist.std)
    elapsed = time.perf_counter() - started

    steps = [
        (means[k + 1] - means[k], np.hypot(errors[k], errors[k + 1]))
        for k in range(len(strengths) - 1)
    ]
    mean_ok = all(rise <= tolerance for rise, tolerance in steps)
    std_ratio = stds[-1] / stds[0]
    std_ok = std_ratio < 0.25
    ok = mean_ok and std_ok and elapsed < 600.0
    step_text = ", ".join(f"{rise:+.4f} (se {tol:.4f})" for rise, tol in steps)
    report(
        8,
        ok,
        f"RAND means {[round(m, 4) for m in means]}, steps {step_text}; "
        f"fixed-x std ratio {std_ratio:.4f} (< 0.25); {elapsed:.1f}s",
    )
    assert std_ratio < 0.25
    assert elapsed < 600.0
    for k, (rise, tolerance) in enumerate(steps):
        assert rise <= tolerance, (
            f"step {k}: mean rose by {rise:.4f}, more than one pooled "
            f"standard error ({tolerance:.4f})"
        )


def test_criterion_09_rank_one_update_equivalence_and_speed():
    blocks = extract_blocks(synth_environment(EnvironmentSpec(2, 2, 64, 0.9, 1.0, seed=3)))
    r0 = sample_loads(UNI, 64, substream(42))
    gen = substream(43)
    flips = [(int(gen.random() * 64), sample_loads(UNI, 1, gen)[0]) for _ in range(1000)]

    def full_pair(r):
        g = coupling_resolvent(blocks.s_ss, r)
        h = blocks.s_rt + blocks.s_rs @ (g * r[None, :]) @ blocks.s_st
        return g, h

    # correctness: chain the incremental resolvent through all 1000 flips
    g = coupling_resolvent(blocks.s_ss, r0)
    r = r0.copy()
    worst_g = worst_h = 0.0
    for k, v in flips:
        g, h = woodbury_channel_update(blocks, g, r, k, v)
        r[k] = v
        g_full, h_full = full_pair(r)
        worst_g = max(worst_g, np.linalg.norm(g - g_full) / np.linalg.norm(g_full))
        worst_h = max(worst_h, np.linalg.norm(h - h_full) / np.linalg.norm(h_full))

    def time_incremental():
        g = coupling_resolvent(blocks.s_ss, r0)
        r = r0.copy()
        t0 = time.perf_counter()
        for k, v in flips:
            g, _ = woodbury_channel_update(blocks, g, r, k, v)
            r[k] = v
        return time.perf_counter() - t0

    def time_full():
        r = r0.copy()
        t0 = time.perf_counter()
        for k, v in flips:
            r[k] = v
            full_pair(r)
        return time.perf_counter() - t0

    t_inc = min(time_incremental() for _ in range(2))
    t_full = min(time_full() for _ in range(2))
    speedup = t_full / t_inc
    ok = worst_g < 1e-10 and worst_h < 1e-10 and speedup >= 5.0
    report(
        9,
        ok,
        f"max rel error G {worst_g:.2e}, H {worst_h:.2e}; "
        f"speedup {speedup:.1f}x ({t_inc * 1e3:.0f}ms vs {t_full * 1e3:.0f}ms)",
    )
    assert worst_g < 1e-10
    assert worst_h < 1e-10
    assert speedup >= 5.0


def test_criterion_10_artifacts_are_worker_invariant(tmp_path, monkeypatch):
    system_path = tmp_path / "system.json"
    save_system(synth_environment(EnvironmentSpec(3, 4, 16, 0.9, 1.0, seed=0)), system_path)

    def artifact_bytes(out_dir, names):
        return tuple((out_dir / name).read_bytes() for name in names)

    dist_names = ("config.json", "samples.csv", "summary.json", "histogram.csv")
    dist_runs = []
    for tag, threads in (("t1", "1"), ("t4", "4"), ("t8", "8"), ("t1-again", "1")):
        monkeypatch.setenv("BSDOF_THREADS", threads)
        out = tmp_path / f"dist-{tag}"
        rc = main(
            ["bs-dist", "--system", str(system_path), "--n", "3000",
             "--seed", "1", "--out-dir", str(out)]
        )
        assert rc == 0
        dist_runs.append(artifact_bytes(out, dist_names))
    dist_ok = all(run == dist_runs[0] for run in dist_runs[1:])

    opt_names = ("config.json", "optimization.json", "best_x.json",
                 "samples.csv", "summary.json", "histogram.csv")
    opt_runs = []
    for tag, threads in (("t1", "1"), ("t4", "4"), ("t8", "8")):
        monkeypatch.setenv("BSDOF_THREADS", threads)
        out = tmp_path / f"opt-{tag}"
        rc = main(
            ["optimize-x", "--system", str(system_path), "--constraint", "uni",
             "--objective-samples", "150", "--starts", "2", "--max-iterations", "300",
             "--final-n", "600", "--seed", "2", "--out-dir", str(out)]
        )
        assert rc == 0
        opt_runs.append(artifact_bytes(out, opt_names))
    opt_ok = all(run == opt_runs[0] for run in opt_runs[1:])

    ok = dist_ok and opt_ok
    report(
        10,
        ok,
        f"bs-dist artifacts identical over workers 1/4/8 + rerun: {dist_ok}; "
        f"optimize-x artifacts identical over workers 1/4/8: {opt_ok}",
    )
    assert dist_ok
    assert opt_ok
