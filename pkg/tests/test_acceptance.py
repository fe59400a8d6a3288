"""Release gate: nine numbered end-to-end checks.

One test per property so a verbose run prints one pass/fail line each:
transform exactness, bit-serial oracle equivalence, termination
soundness, cycle statistics under saturated thresholds, noise/margin
failure trends, gradient correctness, training behavior, CLI
determinism and the cycle-reduction proxy.
"""

import itertools
import time

import numpy as np

from bitwht.activation import (ThresholdVector, soft_threshold,
                               soft_threshold_grad)
from bitwht.cli import _sample_thresholds, main
from bitwht.crossbar import (CrossbarConfig, NoiseModel, f0_apply,
                             failure_stats)
from bitwht.earlyterm import (f0_with_early_term, random_termination_study,
                              start_bounds, update_bounds)
from bitwht.fixedpoint import BitplaneMatrix
from bitwht.hadamard import build_hadamard, build_walsh, fwht
from bitwht.network import (LossConfig, build_network, make_toy_dataset,
                            penalty_term, train)
from bitwht.surrogate import SurrogateConfig, TauSchedule, f0_surrogate


def test_c1_walsh_hadamard_exactness():
    start = time.perf_counter()
    for k in range(11):
        for mat in (build_hadamard(k), build_walsh(k)):
            w = mat.entries.astype(np.float64)
            assert np.array_equal(w @ w.T, float(2**k) * np.eye(2**k))
    rng = np.random.default_rng(11)
    for k in range(13):
        x = rng.integers(-8, 9, size=(1000, 2**k))
        w = build_hadamard(k).entries.astype(np.float64)
        # entries stay far below 2^53, so the float product is exact
        naive = (x.astype(np.float64) @ w.T).astype(np.int64)
        assert np.array_equal(fwht(x), naive)
    assert time.perf_counter() - start < 10.0


def _reference_bit_serial(matrix, codes, signs, num_bits):
    """Plain-Python restatement: per plane, signed-bit dot then comparator."""
    outputs = []
    for row in matrix:
        acc = 0
        for b in range(1, num_bits + 1):
            psum = 0
            for w, c, s in zip(row, codes, signs):
                psum += w * s * ((c >> (b - 1)) & 1)
            acc += (1 << (b - 1)) if psum > 0 else -(1 << (b - 1))
        outputs.append(acc)
    return outputs


def test_c2_bit_serial_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(22)
    for _ in range(10_000):
        rows = int(rng.integers(1, 9))
        n = int(rng.integers(1, 33))
        num_bits = int(rng.integers(1, 9))
        matrix = (rng.integers(0, 2, size=(rows, n)) * 2 - 1).astype(np.int8)
        codes = rng.integers(0, 1 << num_bits, size=n, dtype=np.int64)
        signs = rng.integers(0, 2, size=n, dtype=np.int64) * 2 - 1
        bp = BitplaneMatrix.from_codes(codes, signs, num_bits, 1.0)
        got = f0_apply(CrossbarConfig(matrix=matrix), bp)
        want = _reference_bit_serial(matrix.tolist(), codes.tolist(),
                                     signs.tolist(), num_bits)
        assert got.tolist() == want
    assert time.perf_counter() - start < 30.0


def test_c3_early_termination_soundness():
    # 10^4 random noiseless elements: anything that stopped early must have
    # had a full value inside the dead zone, everything else is untouched
    rng = np.random.default_rng(33)
    rows, cols = 16, 12
    terminated_total = 0
    for _ in range(10_000 // rows):
        num_bits = int(rng.integers(2, 9))
        matrix = (rng.integers(0, 2, size=(rows, cols)) * 2 - 1).astype(np.int8)
        cfg = CrossbarConfig(matrix=matrix)
        codes = rng.integers(0, 1 << num_bits, size=cols, dtype=np.int64)
        signs = rng.integers(0, 2, size=cols, dtype=np.int64) * 2 - 1
        bp = BitplaneMatrix.from_codes(codes, signs, num_bits, 1.0)
        thresholds = rng.integers(0, 1 << num_bits, size=rows, dtype=np.int64)
        values, trace = f0_with_early_term(cfg, bp, thresholds)
        full = f0_apply(cfg, bp)
        term = trace.terminated
        assert np.all(np.abs(full[term]) <= thresholds[term])
        assert np.all(trace.cycles[term] < num_bits)
        assert np.array_equal(values[~term], full[~term])
        assert np.all(values[term] == 0)
        terminated_total += int(term.sum())
    assert terminated_total > 1000  # the check exercised real terminations

    # exhaustive bound validity: for every prefix of every decision pattern
    # the running bracket equals the true extremes over all completions
    for num_bits in range(1, 7):
        for depth in range(1, num_bits + 1):
            for prefix in itertools.product((1, -1), repeat=depth):
                rb = start_bounds(num_bits)
                for i, d in enumerate(prefix):
                    rb = update_bounds(rb, d, num_bits - i)
                finals = []
                for suffix in itertools.product((1, -1), repeat=num_bits - depth):
                    y = rb.y
                    for j, d in enumerate(suffix):
                        y += d * (1 << (num_bits - depth - j - 1))
                    finals.append(y)
                assert rb.y_ub == max(finals)
                assert rb.y_lb == min(finals)


def test_c4_bimodal_thresholds_need_under_two_cycles():
    start = time.perf_counter()
    num_bits, cols, trials = 8, 16, 10_000
    bimodal = _sample_thresholds("bimodal_near_tmax", num_bits, trials,
                                 np.random.default_rng(44))
    uniform = _sample_thresholds("uniform", num_bits, trials,
                                 np.random.default_rng(45))
    mean_bimodal = random_termination_study(num_bits, cols, trials,
                                            bimodal, seed=46).mean_cycles
    mean_uniform = random_termination_study(num_bits, cols, trials,
                                            uniform, seed=46).mean_cycles
    assert mean_bimodal < 2.0
    assert mean_uniform > mean_bimodal
    assert time.perf_counter() - start < 60.0


def test_c5_noise_margin_failure_trends():
    sigmas = (0.0, 0.25, 0.5, 0.75, 1.0)
    margins = (0.0, 0.05, 0.1, 0.15, 0.2)
    cfg = CrossbarConfig(matrix=np.ones((16, 16), dtype=np.int8))
    grid = np.empty((5, 5))
    for i, sigma in enumerate(sigmas):
        for j, sm in enumerate(margins):
            noise = NoiseModel(sigma_ant=sigma, safety_margin=sm, seed=77)
            grid[i, j] = failure_stats(cfg, noise, 10_000, num_bits=8)
    assert np.all(grid[0] == 0.0)
    assert np.all(np.diff(grid, axis=0) >= 0.0)  # worse with more noise
    assert np.all(np.diff(grid, axis=1) <= 0.0)  # better with more margin
    assert grid.max() > 0.0


def test_c6_surrogate_gradient_finite_differences():
    rng = np.random.default_rng(66)
    h = 1e-6
    done = 0
    while done < 20:
        n = int(rng.integers(2, 9))
        rows = int(rng.integers(1, 6))
        num_bits = int(rng.integers(1, 5))
        x = rng.uniform(-0.95, 0.95, n)
        v = np.abs(x) * (2**num_bits - 1)
        # stay clear of the sign kink at 0 and the steep codec boundaries
        if np.any(np.abs(x) < 1e-3) or np.any(np.abs(v - np.round(v)) < 1e-3):
            continue
        matrix = (rng.integers(0, 2, size=(rows, n)) * 2 - 1).astype(np.int8)
        cfg = SurrogateConfig(tau=10.0, b_max=num_bits, x_max=1.0)
        _, jac = f0_surrogate(cfg, x, matrix)
        fd = np.zeros_like(jac)
        for j in range(n):
            e = np.zeros(n)
            e[j] = h
            yp, _ = f0_surrogate(cfg, x + e, matrix)
            ym, _ = f0_surrogate(cfg, x - e, matrix)
            fd[:, j] = (yp - ym) / (2 * h)
        resolvable = np.abs(fd) > 1e-6
        if resolvable.any():
            rel = np.abs(jac - fd)[resolvable] / np.abs(fd)[resolvable]
            assert rel.max() <= 1e-3
        if (~resolvable).any():
            assert np.abs(jac - fd)[~resolvable].max() <= 1e-6
        done += 1

    rng = np.random.default_rng(67)
    h2 = 1e-5
    checked = 0
    while checked < 200:
        x = np.array([float(rng.uniform(-2, 2))])
        t = np.array([float(rng.uniform(-1.5, 1.5))])
        if (abs(abs(x[0]) - abs(t[0])) < 10 * h2 or abs(x[0]) < 10 * h2
                or abs(t[0]) < 10 * h2):
            continue
        dx, dt = soft_threshold_grad(x, t)
        fdx = (soft_threshold(x + h2, t) - soft_threshold(x - h2, t)) / (2 * h2)
        fdt = (soft_threshold(x, t + h2) - soft_threshold(x, t - h2)) / (2 * h2)
        assert abs(dx[0] - fdx[0]) <= 1e-4
        assert abs(dt[0] - fdt[0]) <= 1e-4
        checked += 1


def test_c7_training_property_suite():
    start = time.perf_counter()
    sched = TauSchedule()

    # (a) the 1-bit evaluation path keeps pace with a paired float baseline
    for seed in (0, 1, 2):
        data = make_toy_dataset(3, 16, 20, seed=seed)
        quant = build_network(16, [(16, "expand")], 3, seed=seed)
        rep_q = train(quant, data, 25, sched, LossConfig(), seed=seed,
                      lr=0.15, batch_size=16)
        base = build_network(16, [(16, "expand")], 3, seed=seed)
        rep_f = train(base, data, 25, sched, LossConfig(), seed=seed,
                      lr=0.15, batch_size=16, exec_mode="float")
        assert abs(rep_q.accuracy[-1] - rep_f.accuracy[-1]) <= 0.05
        assert rep_f.accuracy[-1] >= 0.9

    # (b) the sparsity-directed penalty saturates thresholds
    data = make_toy_dataset(3, 16, 20, seed=5)
    finals = {}
    for lam in (0.0, 0.02):
        model = build_network(16, [(16, "expand")], 3, seed=5)
        cfg = LossConfig(lambda_=lam, regularizer_direction="sparsity_intent")
        rep = train(model, data, 25, sched, cfg, seed=5, lr=0.15, batch_size=16)
        finals[lam] = rep.frac_high[-1]
    assert finals[0.02] > finals[0.0]

    # (c) descent on the penalty alone drives mean g up to the clamp
    tv = ThresholdVector(np.full(32, 0.15), 1.0)
    prev = float(np.mean(np.abs(tv.values)))
    saturated = False
    for _ in range(400):
        _, grad = penalty_term(tv)
        tv.values += 0.05 * 0.05 * grad  # lr * lambda, sparsity direction
        tv.clamp()
        cur = float(np.mean(np.abs(tv.values)))
        if prev < 1.0:
            assert cur > prev
        prev = cur
        if cur == 1.0:
            saturated = True
    assert saturated
    assert time.perf_counter() - start < 300.0


def test_c8_cli_rerun_byte_identity(tmp_path):
    vec = tmp_path / "x.csv"
    vec.write_text("0.5\n-0.25\n0.75\n0.0\n1.0\n-0.125\n")
    commands = {
        "transform": ["transform", "--input", str(vec), "--block", "4"],
        "sweep": ["sweep-ant", "--sigma-ant", "0,0.5", "--sm", "0,0.1",
                  "--rows", "8", "--cols", "8", "--trials", "500",
                  "--seed", "9"],
        "earlyterm": ["earlyterm", "--bits", "8", "--cols", "16",
                      "--trials", "3000", "--tdist", "bimodal_near_tmax",
                      "--seed", "9"],
        "train": ["train", "--classes", "2", "--dim", "8", "--samples", "6",
                  "--epochs", "2", "--batch", "4", "--seed", "9"],
    }
    for name, argv in commands.items():
        first = tmp_path / f"{name}_1.csv"
        second = tmp_path / f"{name}_2.csv"
        assert main(argv + ["--out", str(first)]) == 0
        assert main(argv + ["--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()
        assert first.stat().st_size > 0


def test_c9_early_termination_cuts_mean_cycles():
    num_bits, cols, trials = 8, 16, 10_000
    bimodal = _sample_thresholds("bimodal_near_tmax", num_bits, trials,
                                 np.random.default_rng(99))
    with_term = random_termination_study(num_bits, cols, trials,
                                         bimodal, seed=100).mean_cycles
    without = random_termination_study(num_bits, cols, trials,
                                       np.zeros(trials, dtype=np.int64),
                                       seed=100).mean_cycles
    assert without == 8.0
    assert with_term <= 2.0
    assert without / with_term >= 4.0
