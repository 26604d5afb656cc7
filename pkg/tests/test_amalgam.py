import math

import numpy as np
import pytest

from deformlab import (AmalgamParams, Grid, SampledSignal, amalgam_norm,
                       amalgam_norm_discrete, check_convolution_dilation,
                       check_embedding_const, check_rescaling, dilate,
                       l2_norm, random_signal, window_sup)
from deformlab.amalgam import sliding_max

INF = math.inf


def brute_window_max(values, half_width):
    n = values.size
    out = np.empty(n)
    for j in range(n):
        idx = (j + np.arange(-half_width, half_width + 1)) % n
        out[j] = values[idx].max()
    return out


def test_params_validation():
    with pytest.raises(ValueError):
        AmalgamParams(0.5, 2.0, 1.0)
    with pytest.raises(ValueError):
        AmalgamParams(2.0, 2.0, 0.0)
    AmalgamParams(INF, INF, 1.0)  # infinities are first-class


def test_sliding_max_matches_brute_force():
    rng = np.random.default_rng(0)
    for n in (5, 16, 41):
        v = rng.uniform(-1, 1, n)
        for w in (1, 3, 7):
            assert np.array_equal(sliding_max(v, w), brute_window_max(v, w))


def test_window_sup_exhaustive_small_n():
    rng = np.random.default_rng(1)
    for n in (8, 16, 64):
        grid = Grid(n, 1.0)
        f = random_signal(grid, rng)
        for r in (1.0, 3.0):
            got = window_sup(f, r).samples.real
            want = brute_window_max(np.abs(f.samples), int(r))
            assert np.array_equal(got, want)


def test_window_sup_dominates_signal():
    grid = Grid(128, 0.5)
    f = random_signal(grid, np.random.default_rng(2))
    assert np.all(window_sup(f, 2.0).samples.real >= np.abs(f.samples) - 1e-15)


def test_window_sup_norm_equals_amalgam_inf_2():
    grid = Grid(200, 1.0)
    f = random_signal(grid, np.random.default_rng(3))
    for r in (1.0, 4.0):
        assert l2_norm(window_sup(f, r)) == amalgam_norm(f, AmalgamParams(INF, 2.0, r))


def test_x22_is_rescaled_l2_exactly():
    """Window of radius r holds 2r/spacing + 1 samples; the (2,2) norm is the
    volume-weighted L2 norm, exact on the grid."""
    grid = Grid(256, 0.5)
    f = random_signal(grid, np.random.default_rng(4))
    for r in (1.0, 2.0, 8.0):
        expected = np.sqrt(2 * r + grid.spacing) * l2_norm(f)
        assert amalgam_norm(f, AmalgamParams(2.0, 2.0, r)) == pytest.approx(
            expected, rel=1e-12)


def test_indicator_inf_2_norm():
    # sup over the radius-1 window of 1_[0,1) is 1 on an interval of length
    # 2r + 1 = 3, so the norm is sqrt(3) up to the grid cell at each edge
    grid = Grid(1024, 1 / 64)
    vals = ((grid.x >= 0) & (grid.x < 1)).astype(float)
    f = SampledSignal(grid, vals)
    assert amalgam_norm(f, AmalgamParams(INF, 2.0, 1.0)) == pytest.approx(
        math.sqrt(3), abs=0.05)


def test_zero_signal_is_zero_for_all_exponents():
    grid = Grid(64, 1.0)
    z = SampledSignal(grid, np.zeros(64))
    for p in (1.0, 2.0, INF):
        for q in (1.0, 2.0, INF):
            assert amalgam_norm(z, AmalgamParams(p, q, 2.0)) == 0.0


def test_monotone_in_radius():
    grid = Grid(128, 1.0)
    rng = np.random.default_rng(5)
    for _ in range(50):
        f = random_signal(grid, rng)
        for p in (1.0, 2.0, INF):
            for q in (2.0, INF):
                n1 = amalgam_norm(f, AmalgamParams(p, q, 2.0))
                n2 = amalgam_norm(f, AmalgamParams(p, q, 5.0))
                assert n1 <= n2 * (1 + 1e-12)


def test_norm_axioms():
    grid = Grid(96, 1.0)
    rng = np.random.default_rng(6)
    params = AmalgamParams(INF, 2.0, 3.0)
    for _ in range(10):
        f, g = random_signal(grid, rng), random_signal(grid, rng)
        lam = rng.uniform(0.1, 5.0)
        assert amalgam_norm(SampledSignal(grid, lam * f.samples), params) == \
            pytest.approx(lam * amalgam_norm(f, params), rel=1e-12)
        both = SampledSignal(grid, f.samples + g.samples)
        assert amalgam_norm(both, params) <= \
            amalgam_norm(f, params) + amalgam_norm(g, params) + 1e-10


def test_discrete_norm_equivalence_bracket():
    grid = Grid(256, 0.25)
    rng = np.random.default_rng(7)
    for _ in range(50):
        f = random_signal(grid, rng)
        cont = amalgam_norm(f, AmalgamParams(INF, 2.0, 1.0))
        disc = amalgam_norm_discrete(f, INF, 2.0)
        assert cont / 4 <= disc <= 4 * cont


def test_discrete_norm_indicator_single_cell():
    grid = Grid(64, 0.25)
    vals = ((grid.x >= 4.0) & (grid.x < 5.0)).astype(float)
    f = SampledSignal(grid, vals)
    assert amalgam_norm_discrete(f, INF, 1.0) == 1.0


def test_discrete_norm_cell_shift_invariance():
    grid = Grid(128, 0.5)
    f = random_signal(grid, np.random.default_rng(8))
    shifted = SampledSignal(grid, np.roll(f.samples, 2))  # one full unit cell
    for (p, q) in ((1.0, 1.0), (INF, 2.0), (2.0, INF)):
        a = amalgam_norm_discrete(f, p, q)
        b = amalgam_norm_discrete(shifted, p, q)
        assert a == pytest.approx(b, rel=1e-14)


def test_discrete_norm_needs_integer_cells():
    grid = Grid(96, 0.75)
    f = random_signal(grid, np.random.default_rng(9))
    with pytest.raises(ValueError):
        amalgam_norm_discrete(f, 2.0, 2.0)


def test_dilate_restrides_samples():
    grid = Grid(64, 1.0)
    f = random_signal(grid, np.random.default_rng(10))
    d = dilate(f, 2.0)
    assert d.grid.n_samples == 64 and d.grid.spacing == 0.5
    assert np.array_equal(d.samples, f.samples)


def test_rescaling_identity_trivial_and_random():
    grid = Grid(512, 1.0)
    rng = np.random.default_rng(11)
    f = random_signal(grid, rng)
    assert check_rescaling(f, INF, 2.0, 1.0)["relative_gap"] == 0.0
    worst = 0.0
    for _ in range(20):
        g = random_signal(grid, rng)
        for r in (2.0, 4.0):
            for (p, q) in ((INF, 2.0), (2.0, 2.0), (1.0, INF)):
                worst = max(worst, check_rescaling(g, p, q, r)["relative_gap"])
    assert worst <= 1e-10


def test_embedding_degenerate_and_hoelder():
    grid = Grid(128, 0.5)
    rng = np.random.default_rng(12)
    sigs = [random_signal(grid, rng) for _ in range(50)]
    same = check_embedding_const(sigs, 2.0, 2.0, 2.0, 2.0)
    assert same["fitted_constant"] <= 1 + 1e-10
    hoelder = check_embedding_const(sigs, 1.0, INF, 2.0, 2.0)
    assert hoelder["fitted_constant"] <= 4.0
    with pytest.raises(ValueError):
        check_embedding_const(sigs, INF, 1.0, 2.0, 2.0)


def test_embedding_skips_zero_signals():
    grid = Grid(32, 1.0)
    sigs = [SampledSignal(grid, np.zeros(32)),
            random_signal(grid, np.random.default_rng(13))]
    out = check_embedding_const(sigs, 1.0, 2.0, 2.0, 1.0)
    assert out["skipped"] == 1 and out["n_signals"] == 1


def test_convolution_dilation_constants():
    # L2 * L2 -> Linf is the Young-consistent triple for (2, 2) inputs
    grid = Grid(128, 0.5)
    rng = np.random.default_rng(14)
    pairs = [(random_signal(grid, rng), random_signal(grid, rng))
             for _ in range(20)]
    out = check_convolution_dilation(pairs, INF, INF, 2.0, 2.0, 2.0, 2.0,
                                     radius=1.0, dilation_factors=(0.5, 1.0, 2.0))
    assert np.isfinite(out["convolution_constant"])
    assert out["dilation_constants"][1.0] == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        check_convolution_dilation(pairs, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, radius=1.0)


def test_convolution_delta_hand_summation():
    # g concentrated at one sample acts like spacing-weighted translation
    grid = Grid(8, 1.0)
    rng = np.random.default_rng(15)
    f = random_signal(grid, rng)
    g_vals = np.zeros(8)
    g_vals[3] = 1.0
    g = SampledSignal(grid, g_vals)
    out = check_convolution_dilation([(f, g)], INF, INF, 2.0, 2.0, 2.0, 2.0,
                                     radius=1.0, dilation_factors=(1.0,))
    hand = np.array([sum(f.samples[m] * g_vals[(j - m) % 8] for m in range(8))
                     for j in range(8)])
    from deformlab import convolve
    assert np.max(np.abs(convolve(f, g).samples - hand)) < 1e-10
    assert np.isfinite(out["convolution_constant"])
