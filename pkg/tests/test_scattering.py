import numpy as np
import pytest

from deformlab import (FeatureVector, Grid, LayerModule, SampledSignal,
                       ScatteringNetwork, check_translation_covariance,
                       estimate_lipschitz, extract_features, feature_distance,
                       features_to_csv, l2_norm, network_from_config,
                       propagate, random_signal, root_feature_limit,
                       shannon_bank, signal_from_spectrum, spectrum)
from deformlab.scattering import network_config_roundtrip
from deformlab.signals import Spectrum

GRID = Grid(256, 1.0)


def dyadic_net(j=3, q=1, depth=2, grid=GRID, eps=1e-6):
    layers = tuple(LayerModule(shannon_bank(j, q if d == 0 else 1, grid))
                   for d in range(depth))
    return ScatteringNetwork(layers, depth, eps)


def in_band_signal(grid, k_bins, seed=0):
    rng = np.random.default_rng(seed)
    coeff = np.zeros(grid.n_samples, dtype=complex)
    for k in k_bins:
        coeff[k] = rng.standard_normal() + 1j * rng.standard_normal()
    return signal_from_spectrum(Spectrum(grid, coeff))


def test_dyadic_bank_edges_and_partition():
    bank = shannon_bank(3, 1, Grid(64, 1.0))
    assert bank.n_atoms == 3
    want = np.pi * np.array([[1 / 8, 1 / 4], [1 / 4, 1 / 2], [1 / 2, 1]])
    assert np.max(np.abs(bank.band_edges - want)) < 1e-12
    cover = bank.low_mask + bank.band_masks.sum(axis=0)
    assert np.array_equal(cover, np.ones(64))


def test_frame_function_is_exactly_one():
    for j, q, n in ((3, 1, 64), (5, 2, 256), (9, 8, 1024)):
        bank = shannon_bank(j, q, Grid(n, 1.0))
        frame = bank.frame_function()
        assert frame.min() == 1.0 and frame.max() == 1.0


def test_fine_bank_drops_unresolvable_sub_bands():
    bank = shannon_bank(9, 8, Grid(1024, 1.0))
    # the geometric ladder outruns the bin resolution at coarse octaves
    assert bank.n_atoms == 54 < 9 * 8
    assert all(m.any() for m in bank.band_masks)
    assert bank.band_edges[-1, 1] == Grid(1024, 1.0).nyquist


def test_bank_validation():
    with pytest.raises(ValueError):
        shannon_bank(0, 1, GRID)
    with pytest.raises(ValueError):
        shannon_bank(3, 0, GRID)
    with pytest.raises(ValueError):
        shannon_bank(8, 1, GRID)  # low-pass thinner than one bin at N=256


def test_layer_and_network_validation():
    bank = shannon_bank(3, 1, GRID)
    with pytest.raises(ValueError):
        LayerModule(bank, nonlinearity="relu")
    with pytest.raises(ValueError):
        LayerModule(bank, pooling_factor=2.0)
    bad = LayerModule(bank, lipschitz_bound=1.5)
    assert not bad.admissible
    with pytest.raises(ValueError):
        ScatteringNetwork((bad,), 1)
    good = LayerModule(bank)
    with pytest.raises(ValueError):
        ScatteringNetwork((good,), 2)
    with pytest.raises(ValueError):
        ScatteringNetwork((good,), 1, eps_path=-1e-3)
    other = LayerModule(shannon_bank(3, 1, Grid(128, 1.0)))
    with pytest.raises(ValueError):
        ScatteringNetwork((good, other), 2)


def test_propagate_empty_path_and_band_isometry():
    net = dyadic_net()
    f = random_signal(GRID, np.random.default_rng(0))
    assert np.array_equal(propagate(net, f, ()).samples, f.samples)
    sp = spectrum(f)
    bank = net.layers[0].bank
    # modulus preserves the l2 norm of the filtered signal
    for atom in range(bank.n_atoms):
        out = propagate(net, f, (atom,))
        want = np.sqrt(np.sum(np.abs(sp.coefficients) ** 2
                              * bank.band_masks[atom]) / GRID.period)
        assert l2_norm(out) == pytest.approx(want, rel=1e-12)


def test_propagate_matches_hand_rolled_two_step():
    grid = Grid(64, 1.0)
    net = dyadic_net(j=3, q=1, depth=2, grid=grid)
    f = random_signal(grid, np.random.default_rng(1))
    m1 = net.layers[0].bank.band_masks[2]
    m2 = net.layers[1].bank.band_masks[0]
    first = np.abs(np.fft.ifft(np.fft.fft(f.samples) * m1))
    second = np.abs(np.fft.ifft(np.fft.fft(first) * m2))
    got = propagate(net, f, (2, 0))
    assert np.max(np.abs(got.samples - second)) < 1e-12


def test_propagate_validation():
    net = dyadic_net()
    f = random_signal(GRID, np.random.default_rng(2))
    with pytest.raises(ValueError):
        propagate(net, f, (99,))
    with pytest.raises(ValueError):
        propagate(net, f, (0, 0, 0))
    with pytest.raises(ValueError):
        propagate(net, random_signal(Grid(64, 1.0), np.random.default_rng(2)), ())
    with pytest.raises(TypeError):
        propagate(net, np.zeros(256), ())


def test_features_of_zero_signal_vanish():
    net = dyadic_net()
    fv = extract_features(net, SampledSignal(GRID, np.zeros(256)))
    assert fv.norm() == 0.0


def test_low_band_signal_passes_depth_zero_unchanged():
    net = dyadic_net(j=3)
    f = in_band_signal(GRID, (0, 3, -7, 12), seed=3)  # inside |omega| <= pi/8
    fv = extract_features(net, f, max_depth=0)
    assert list(fv.entries) == [()]
    assert np.max(np.abs(fv.entries[()].samples - f.samples)) < 1e-8


def test_feature_energy_never_exceeds_signal_energy():
    net = dyadic_net(j=3, q=2, depth=2)
    rng = np.random.default_rng(4)
    for _ in range(50):
        f = random_signal(GRID, rng)
        fv = extract_features(net, f, eps_path=0.0)
        assert fv.norm() <= l2_norm(f) * (1 + 1e-9)


def test_extract_validation():
    net = dyadic_net()
    f = random_signal(GRID, np.random.default_rng(5))
    with pytest.raises(ValueError):
        extract_features(net, f, eps_path=-1.0)
    with pytest.raises(ValueError):
        extract_features(net, f, max_depth=3)


def test_feature_distance_metric_properties():
    net = dyadic_net()
    rng = np.random.default_rng(6)
    f, g, h = (random_signal(GRID, rng) for _ in range(3))
    ff, fg, fh = (extract_features(net, s, eps_path=0.0) for s in (f, g, h))
    assert feature_distance(ff, ff) == 0.0
    zero = extract_features(net, SampledSignal(GRID, np.zeros(256)), eps_path=0.0)
    assert feature_distance(ff, zero) == pytest.approx(ff.norm(), rel=1e-12)
    assert feature_distance(ff, fh) <= \
        feature_distance(ff, fg) + feature_distance(fg, fh) + 1e-10


def test_translation_covariance_to_rounding():
    net = dyadic_net()
    f = random_signal(GRID, np.random.default_rng(7))
    for shift in (0, 17, 128):
        assert check_translation_covariance(net, f, shift) <= 1e-8
    with pytest.raises(ValueError):
        check_translation_covariance(net, f, 2.5)


def test_pathwise_non_expansiveness():
    net = dyadic_net()
    rng = np.random.default_rng(8)
    f = random_signal(GRID, rng)
    g = random_signal(GRID, rng)
    dist = l2_norm(SampledSignal(GRID, f.samples - g.samples))
    for path in ((), (0,), (2,), (2, 0), (1, 1)):
        a = propagate(net, f, path)
        b = propagate(net, g, path)
        gap = l2_norm(SampledSignal(GRID, a.samples - b.samples))
        assert gap <= dist * (1 + 1e-10)


def test_empirical_lipschitz_below_one():
    net = dyadic_net(depth=1)
    ratio = estimate_lipschitz(net, 25, np.random.default_rng(9))
    assert ratio <= 1.0 + 1e-6


def test_features_add_for_band_separated_signals():
    net = dyadic_net(j=3, q=1, depth=1)
    f = in_band_signal(GRID, (40, -45), seed=10)   # second octave band
    g = in_band_signal(GRID, (100, -110), seed=11)  # top band
    both = extract_features(net, SampledSignal(GRID, f.samples + g.samples),
                            eps_path=0.0)
    merged = extract_features(net, f, eps_path=0.0) \
        + extract_features(net, g, eps_path=0.0)
    assert feature_distance(both, merged) <= 1e-6 * (l2_norm(f) + l2_norm(g))


def test_pruning_discards_only_negligible_energy():
    net = dyadic_net(j=3, q=2, depth=2)
    f = random_signal(GRID, np.random.default_rng(12))
    full = extract_features(net, f, eps_path=0.0)
    pruned = extract_features(net, f, eps_path=1e-6)
    assert len(pruned.entries) <= len(full.entries)
    assert feature_distance(full, pruned) <= 1e-3 * l2_norm(f)


def test_root_feature_limit_reaches_the_raw_error():
    from deformlab import (MraSpace, bspline_filter, tau_alternating,
                           tent_profile_coefficients)
    grid = Grid(1024, 1.0)
    space = MraSpace(bspline_filter(1), 16.0, grid)
    c = tent_profile_coefficients(space, 64.0)
    fld = tau_alternating(16.0, 8, grid)
    out = root_feature_limit(c, fld, (16.0, 8.0, 4.0, 2.0, 1.0))
    assert out["monotone_violations"] == 0
    assert out["rows"][-1]["ratio"] == pytest.approx(1.0, abs=1e-12)
    ratios = [r["ratio"] for r in out["rows"]]
    assert ratios == sorted(ratios)
    with pytest.raises(ValueError):
        root_feature_limit(c, fld, (0.5,))


def test_root_feature_limit_zero_field():
    from deformlab import (MraSpace, bspline_filter, tau_constant,
                           tent_profile_coefficients)
    grid = Grid(1024, 1.0)
    space = MraSpace(bspline_filter(1), 16.0, grid)
    c = tent_profile_coefficients(space, 64.0)
    out = root_feature_limit(c, tau_constant(0.0, grid), (4.0, 2.0, 1.0))
    assert out["limit"] < 1e-12


def test_network_config_roundtrip():
    net = dyadic_net(j=3, q=2, depth=2)
    back = network_config_roundtrip(net)
    assert back.max_depth == net.max_depth
    assert back.eps_path == net.eps_path
    assert [l.bank.n_atoms for l in back.layers] == \
        [l.bank.n_atoms for l in net.layers]
    f = random_signal(GRID, np.random.default_rng(13))
    d = feature_distance(extract_features(net, f), extract_features(back, f))
    assert d == 0.0


def test_network_from_config_validation():
    cfg = {"layers": [{"J": 3, "Q": 1}], "max_depth": 1}
    net = network_from_config(cfg, GRID)
    assert net.max_depth == 1 and net.layers[0].bank.n_atoms == 3


def test_smoothing_mask_saturates_at_last_layer():
    net = dyadic_net(depth=2)
    assert np.array_equal(net.smoothing_mask(2), net.layers[1].bank.low_mask)
    assert np.array_equal(net.smoothing_mask(5), net.layers[1].bank.low_mask)


def test_features_to_csv_format(tmp_path):
    net = dyadic_net(depth=2)
    f = random_signal(GRID, np.random.default_rng(14))
    fv = extract_features(net, f, eps_path=0.0)
    path = tmp_path / "features.csv"
    features_to_csv(fv, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "path,l2_norm"
    assert len(lines) == 1 + len(fv.entries)
    assert lines[1].startswith(",")  # root path is empty
    two_step = [ln for ln in lines[1:] if ln.count("/") == 1]
    assert two_step  # depth-2 paths serialize as atom/atom
