import numpy as np
import pytest

from bitwht.crossbar import CrossbarConfig, NoiseModel, f0_apply
from bitwht.earlyterm import (TerminationTrace, cycle_histogram, f0_with_early_term,
                              random_termination_study, should_terminate,
                              start_bounds, threshold_to_code, update_bounds)
from bitwht.fixedpoint import BitplaneMatrix


def walk(num_bits, decisions):
    rb = start_bounds(num_bits)
    for b, d in zip(range(num_bits, 0, -1), decisions):
        rb = update_bounds(rb, d, b)
    return rb


def test_bounds_after_msb():
    rb = update_bounds(start_bounds(3), -1, 3)
    assert (rb.y, rb.y_ub, rb.y_lb) == (-4, -1, -7)


def test_single_bit_bounds_collapse():
    rb = update_bounds(start_bounds(1), 1, 1)
    assert rb.y_ub == rb.y_lb == rb.y == 1


def test_width_zero_after_all_planes():
    rb = walk(3, [1, -1, 1])
    assert rb.y_ub - rb.y_lb == 0
    assert rb.y == 4 - 2 + 1


def test_width_shrink_law():
    rb = start_bounds(4)
    for b in range(4, 0, -1):
        before = rb.y_ub - rb.y_lb
        rb = update_bounds(rb, 1, b)
        assert rb.y_ub - rb.y_lb == 2 * (2 ** (b - 1) - 1)
        assert rb.y_ub - rb.y_lb < before


def test_update_order_enforced():
    rb = start_bounds(3)
    with pytest.raises(ValueError):
        update_bounds(rb, 1, 2)  # MSB first
    rb = update_bounds(rb, 1, 3)
    with pytest.raises(ValueError):
        update_bounds(rb, 1, 3)  # duplicate plane
    with pytest.raises(ValueError):
        update_bounds(rb, 0, 2)  # decision must be +-1


def test_should_terminate_examples():
    for msb in (1, -1):
        rb = update_bounds(start_bounds(3), msb, 3)
        assert should_terminate(rb, 7)
    rb = update_bounds(start_bounds(3), 1, 3)
    assert not should_terminate(rb, 2)
    with pytest.raises(ValueError):
        should_terminate(rb, -1)


def test_zero_threshold_never_terminates():
    # outputs are odd, so the zero dead zone is unreachable
    for num_bits in (1, 2, 5):
        for pattern in range(2**num_bits):
            rb = start_bounds(num_bits)
            for b in range(num_bits, 0, -1):
                d = 1 if (pattern >> (b - 1)) & 1 else -1
                rb = update_bounds(rb, d, b)
                assert not should_terminate(rb, 0)
            assert rb.y % 2 != 0


def test_bound_validity_exhaustive():
    # every completion of every prefix stays inside the running bracket
    for num_bits in range(1, 7):
        for pattern in range(2**num_bits):
            decisions = [1 if (pattern >> (num_bits - 1 - i)) & 1 else -1
                         for i in range(num_bits)]
            final = sum(d * 2 ** (num_bits - 1 - i) for i, d in enumerate(decisions))
            rb = start_bounds(num_bits)
            for i, b in enumerate(range(num_bits, 0, -1)):
                rb = update_bounds(rb, decisions[i], b)
                assert rb.y_lb <= final <= rb.y_ub


def _random_instance(rng, num_bits, n, rows):
    matrix = rng.choice([-1, 1], size=(rows, n))
    codes = rng.integers(0, 2**num_bits, size=n)
    signs = rng.choice([-1, 1], size=n)
    cfg = CrossbarConfig(matrix=matrix)
    bp = BitplaneMatrix.from_codes(codes, signs, num_bits, 1.0)
    return cfg, bp


def test_zero_thresholds_match_f0_apply():
    rng = np.random.default_rng(13)
    for _ in range(30):
        cfg, bp = _random_instance(rng, 5, 7, 4)
        values, trace = f0_with_early_term(cfg, bp, np.zeros(4, dtype=int))
        assert np.array_equal(values, f0_apply(cfg, bp))
        assert not trace.terminated.any()
        assert np.all(trace.cycles == 5)


def test_zero_thresholds_match_under_noise():
    rng = np.random.default_rng(14)
    cfg, bp = _random_instance(rng, 6, 9, 5)
    noise = NoiseModel(sigma_ant=0.7, safety_margin=0.0, seed=99)
    values, _ = f0_with_early_term(cfg, bp, np.zeros(5, dtype=int), noise)
    assert np.array_equal(values, f0_apply(cfg, bp, noise))


def test_full_scale_threshold_one_cycle():
    rng = np.random.default_rng(15)
    for num_bits in (2, 4, 8):
        cfg, bp = _random_instance(rng, num_bits, 6, 4)
        t = np.full(4, 2**num_bits - 1)
        values, trace = f0_with_early_term(cfg, bp, t)
        assert trace.terminated.all()
        assert np.all(trace.cycles == 1)
        assert np.all(values == 0)


def test_terminated_rows_are_sound():
    rng = np.random.default_rng(16)
    checked = 0
    for _ in range(300):
        num_bits = int(rng.integers(2, 9))
        cfg, bp = _random_instance(rng, num_bits, int(rng.integers(1, 12)), 6)
        thresholds = rng.integers(0, 2**num_bits, size=6)
        values, trace = f0_with_early_term(cfg, bp, thresholds)
        full = f0_apply(cfg, bp)
        term = trace.terminated
        checked += int(term.sum())
        assert np.all(np.abs(full[term]) <= thresholds[term])
        assert np.all(trace.cycles[term] < num_bits)
        assert np.array_equal(values[~term], full[~term])
        assert np.all(values[term] == 0)
    assert checked > 100


def test_cycles_monotone_in_threshold():
    rng = np.random.default_rng(17)
    t = rng.integers(0, 200, size=500)
    lo = random_termination_study(8, 10, 500, t, seed=5)
    hi = random_termination_study(8, 10, 500, np.minimum(t + 40, 255), seed=5)
    assert np.all(hi.cycles <= lo.cycles)


def test_threshold_shape_checks():
    rng = np.random.default_rng(18)
    cfg, bp = _random_instance(rng, 3, 4, 2)
    with pytest.raises(ValueError):
        f0_with_early_term(cfg, bp, np.zeros(3, dtype=int))
    with pytest.raises(ValueError):
        f0_with_early_term(cfg, bp, np.array([-1, 0]))


def test_cycle_histogram_all_full():
    trace = TerminationTrace(num_bits=4, cycles=np.full(10, 4),
                             terminated=np.zeros(10, bool), values=np.ones(10))
    hist = cycle_histogram(trace)
    assert hist.mean == 4.0
    assert hist.counts.tolist() == [0, 0, 0, 10]


def test_cycle_histogram_merges_traces():
    t1 = TerminationTrace(num_bits=3, cycles=np.array([1, 1]),
                          terminated=np.ones(2, bool), values=np.zeros(2))
    t2 = TerminationTrace(num_bits=3, cycles=np.array([3]),
                          terminated=np.zeros(1, bool), values=np.ones(1))
    hist = cycle_histogram([t1, t2])
    assert hist.counts.tolist() == [2, 0, 1]
    assert hist.mean == pytest.approx(5 / 3)


def test_cycle_histogram_errors():
    with pytest.raises(ValueError):
        cycle_histogram([])
    t1 = TerminationTrace(num_bits=3, cycles=np.array([1]),
                          terminated=np.ones(1, bool), values=np.zeros(1))
    t2 = TerminationTrace(num_bits=4, cycles=np.array([1]),
                          terminated=np.ones(1, bool), values=np.zeros(1))
    with pytest.raises(ValueError):
        cycle_histogram([t1, t2])


def test_lockstep_cycles_is_max():
    trace = TerminationTrace(num_bits=4, cycles=np.array([1, 2, 4]),
                             terminated=np.array([True, True, False]),
                             values=np.array([0, 0, 3]))
    assert trace.lockstep_cycles == 4
    assert trace.mean_cycles == pytest.approx(7 / 3)


def test_threshold_to_code():
    assert threshold_to_code(0.0, 8, 1.0) == 0
    assert threshold_to_code(1.0, 8, 1.0) == 255
    assert threshold_to_code(-0.5, 3, 1.0) == 4  # codec rounding on |t|
    assert threshold_to_code(0.3, 8, 2.0) == round(0.3 * 255 / 2.0)


def test_study_reproducible():
    t = np.full(100, 200)
    a = random_termination_study(8, 12, 100, t, seed=3)
    b = random_termination_study(8, 12, 100, t, seed=3)
    assert np.array_equal(a.cycles, b.cycles)
    assert np.array_equal(a.values, b.values)
