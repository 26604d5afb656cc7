import math

import numpy as np
import pytest

from deformlab import (BesovInconclusiveError, DeformationField, Grid,
                       MraCoefficients, MraSpace, SampledSignal,
                       bspline_filter, box_filter, check_dimensional_consistency,
                       deform, l2_norm, loglog_slope, sharpness_large_regime,
                       sharpness_small_regime, synthesize, tau_constant,
                       tent_profile_coefficients, two_regime_envelope,
                       uniform_min_moment, verify_besov, verify_modulated,
                       verify_random_mean, verify_sensitivity)
from deformlab.bounds import report_rows_to_csv

GRID = Grid(256, 1.0)
SPACE = MraSpace(bspline_filter(1), 4.0, GRID)
AMPS = 4.0 * np.exp2(np.arange(-3, 4.0))


def dipole(space, half_width):
    """Zero-mean tent pair; the vanishing mean keeps the coarse remainder small."""
    grid = space.grid
    up = tent_profile_coefficients(space, half_width,
                                   center=0.5 * grid.period - half_width)
    dn = tent_profile_coefficients(space, half_width,
                                   center=0.5 * grid.period + half_width)
    return MraCoefficients(space, up.values - dn.values)


def test_envelope_regimes_and_continuity():
    assert two_regime_envelope(0.0) == 0.0
    assert two_regime_envelope(0.25) == 0.25
    assert two_regime_envelope(4.0) == 2.0
    eps = 1e-9
    assert abs(two_regime_envelope(1 - eps) - two_regime_envelope(1 + eps)) < 1e-8


def test_loglog_slope_recovers_exact_powers():
    x = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    for alpha in (-1.5, 0.5, 2.0):
        slope, err = loglog_slope(x, 3.0 * x ** alpha)
        assert slope == pytest.approx(alpha, abs=1e-12)
        assert err < 1e-12
    slope, err = loglog_slope([1.0, 2.0], [1.0, 2.0])
    assert slope == pytest.approx(1.0) and math.isnan(err)


def test_sensitivity_report_structure():
    rep = verify_sensitivity(SPACE, amplitudes=AMPS, trials=2, seed=0)
    assert rep.theorem_id == "two_regime_sensitivity"
    assert len(rep.rows) == len(AMPS)
    for row, amp in zip(rep.rows, AMPS):
        assert row.amplitude == amp
        assert row.ratio == amp / SPACE.scale
        assert row.quotient == pytest.approx(row.lhs / row.envelope, rel=1e-12)
        assert row.detail["trial_kind"] in {"uniform", "alternating", "selector",
                                            "constant", "collapse"}
    assert rep.fitted_constant == max(r.quotient for r in rep.rows)
    assert rep.metadata["normalized_by_signal_norm"] is True


def test_sensitivity_rates_on_a_small_instance():
    rep = verify_sensitivity(SPACE, amplitudes=AMPS, trials=2, seed=0)
    quotients = [r.quotient for r in rep.rows]
    assert max(quotients) / min(quotients) <= 4.0
    small_slope, _ = rep.slope_fits["small"]
    large_slope, _ = rep.slope_fits["large"]
    assert 0.8 <= small_slope <= 1.2
    assert large_slope <= 0.65


def test_sensitivity_rejects_rough_generators():
    with pytest.raises(ValueError):
        verify_sensitivity(MraSpace(box_filter(), 4.0, GRID), amplitudes=AMPS)


def test_collapse_trial_drives_the_large_regime():
    rep = verify_sensitivity(SPACE, amplitudes=(32.0, 64.0), trials=2, seed=0)
    kinds = {r.detail["trial_kind"] for r in rep.rows}
    assert "collapse" in kinds


def test_modulated_with_zero_phase_reproduces_sensitivity():
    base = verify_sensitivity(SPACE, amplitudes=AMPS, trials=2, seed=3)
    mod = verify_modulated(SPACE, amplitudes=AMPS, omega_amplitudes=(0.0,),
                           trials=2, seed=3)
    assert len(base.rows) == len(mod.rows)
    for a, b in zip(base.rows, mod.rows):
        assert a.lhs == b.lhs and a.envelope == b.envelope


def test_modulated_envelope_absorbs_the_phase():
    mod = verify_modulated(SPACE, amplitudes=AMPS[:4],
                           omega_amplitudes=(0.0, 0.25, 0.5), trials=2, seed=3)
    assert {r.detail["omega_amplitude"] for r in mod.rows} == {0.0, 0.25, 0.5}
    assert all(r.quotient <= 2.5 for r in mod.rows)
    # at fixed warp amplitude the envelope grows with the phase amplitude
    first = [r for r in mod.rows if r.amplitude == AMPS[0]]
    envs = [r.envelope for r in sorted(first, key=lambda r: r.detail["omega_amplitude"])]
    assert envs == sorted(envs) and envs[0] < envs[-1]


def test_pure_phase_error_is_linear_in_amplitude():
    c = tent_profile_coefficients(SPACE, 16.0)
    f = synthesize(c)
    rng = np.random.default_rng(4)
    pattern = rng.uniform(-1.0, 1.0, GRID.n_samples)
    w_values = np.array([0.01, 0.02, 0.04, 0.08])
    errs = []
    for w in w_values:
        fld = DeformationField(GRID, np.zeros(GRID.n_samples), w * pattern)
        errs.append(l2_norm(SampledSignal(GRID, deform(c, fld).samples - f.samples)))
    slope, _ = loglog_slope(w_values, errs)
    assert 0.9 <= slope <= 1.1


def test_dimensional_consistency_is_exact():
    out = check_dimensional_consistency(SPACE, amplitudes=AMPS, trials=2,
                                        seed=0, mu=0.5)
    assert out["max_discrepancy"] <= 1e-8
    assert out["mu"] == 0.5
    assert len(out["base"].rows) == len(out["scaled"].rows)


def test_besov_quotient_stable_over_dilated_family():
    grid = Grid(1024, 1.0)
    coeffs, fields = [], []
    for w in (2.0, 8.0, 32.0):
        space = MraSpace(bspline_filter(1), w, grid)
        coeffs.append(dipole(space, w))
        fields.append(tau_constant(w / 2.0, grid))
    rep = verify_besov(coeffs, fields)
    quotients = [r.quotient for r in rep.rows]
    assert max(quotients) / min(quotients) <= 2.0
    for row in rep.rows:
        assert row.detail["coarse_remainder"] <= 0.1 * row.detail["besov_sum"]


def test_besov_inconclusive_on_mean_carrying_signals():
    # a plain tent keeps its mean in every coarse space, so the remainder
    # never decays and the harness must refuse to conclude
    space = MraSpace(bspline_filter(1), 8.0, Grid(1024, 1.0))
    c = tent_profile_coefficients(space, 32.0)
    with pytest.raises(BesovInconclusiveError):
        verify_besov([c], [tau_constant(4.0, Grid(1024, 1.0))])


def test_besov_rejects_unsupported_filters():
    space = MraSpace(bspline_filter(3), 8.0, Grid(1024, 1.0))
    vals = np.zeros(space.n_coefficients, dtype=complex)
    vals[space.n_coefficients // 2] = 1.0
    c = MraCoefficients(space, vals)
    with pytest.raises(ValueError):
        verify_besov([c], [tau_constant(4.0, Grid(1024, 1.0))])


def test_large_regime_sharpness():
    grid = Grid(1024, 1.0)
    out = sharpness_large_regime(np.pi / 8, [4.0, 8.0, 16.0, 32.0, 64.0], grid)
    slope, stderr = out["slope_norm"]
    assert 0.4 <= slope <= 0.6
    assert out["plateau_value"] == pytest.approx(out["plateau_expected"], rel=0.02)
    assert out["packet_norm"] == pytest.approx(1.0, rel=1e-9)
    with pytest.raises(ValueError):
        sharpness_large_regime(1.0, [4.0], grid)  # stride not an integer
    with pytest.raises(ValueError):
        sharpness_large_regime(np.pi / 8, [4096.0], grid)  # plateau wraps


def test_small_regime_sharpness():
    grid = Grid(1024, 1.0)
    out = sharpness_small_regime(64.0, (4, 8, 16, 32), grid)
    for row in out["rows"]:
        assert row["err_norm"] == pytest.approx(row["expected_err"], rel=1e-9)
        assert row["cutoff"] <= row["n_alt"] / 128.0 < 2 * row["cutoff"]
    slope, _ = out["feature_slope"]
    assert 0.85 <= slope <= 1.15
    low_slope, _ = out["low_band_slope"]
    assert -1.7 <= low_slope <= -1.3
    consts = [row["high_band_constant"] for row in out["rows"]]
    assert max(consts) / min(consts) <= 2.0
    with pytest.raises(ValueError):
        sharpness_small_regime(64.0, (64,), grid)  # cells below two samples


def test_uniform_min_moment_closed_form():
    # numeric oracle: midpoint quadrature of min{(t/s)^2, |t|/s} on [-A, A]
    for a, s in ((1.0, 4.0), (4.0, 4.0), (13.0, 4.0), (64.0, 4.0)):
        t = np.linspace(-a, a, 200001)[:-1] + a / 200000.0
        want = np.mean(np.minimum((t / s) ** 2, np.abs(t) / s))
        assert uniform_min_moment(a, s) == pytest.approx(want, rel=1e-6)
    assert uniform_min_moment(0.0, 4.0) == 0.0
    # the two branches agree where they meet
    assert uniform_min_moment(4.0, 4.0) == pytest.approx(1.0 / 3.0, rel=1e-12)


def test_random_mean_quotient_bounded():
    space = MraSpace(bspline_filter(1), 8.0, Grid(1024, 1.0))
    c = tent_profile_coefficients(space, 32.0)
    rep = verify_random_mean(c, (0.125, 0.5, 1.0, 2.0, 8.0), n_mc=48, seed=7)
    quotients = [r.quotient for r in rep.rows]
    assert max(quotients) / min(quotients) <= 2.0
    for row in rep.rows:
        assert row.detail["mc_standard_error"] <= 0.1 * row.lhs
        assert row.detail["n_mc"] == 48


def test_random_mean_rejects_noisy_estimates():
    space = MraSpace(bspline_filter(1), 8.0, Grid(1024, 1.0))
    c = tent_profile_coefficients(space, 32.0)
    with pytest.raises(ValueError):
        verify_random_mean(c, (1.0,), n_mc=2, seed=0)


def test_report_csv(tmp_path):
    rep = verify_sensitivity(SPACE, amplitudes=AMPS[:3], trials=2, seed=0)
    path = tmp_path / "rows.csv"
    report_rows_to_csv(rep, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "ratio,amplitude,lhs,envelope,quotient"
    assert len(lines) == 1 + len(rep.rows)
    first = [float(v) for v in lines[1].split(",")]
    assert first[0] == rep.rows[0].ratio
    assert first[4] == rep.rows[0].quotient
