import numpy as np
import pytest
from scipy.integrate import dblquad

from qutrit_oam.optics import (
    Field,
    GridError,
    LGModeSpec,
    PhaseMask,
    QuadratureGrid,
    apply_mask,
    conversion_efficiency,
    convergence_gap,
    field_snapshot,
    gaussian_component,
    grating_efficiency_scale,
    lg_amplitude,
    lg_field,
    overlap,
    peak_normalized,
    read_curve_csv,
    richardson,
    step_closed_form,
    step_scan,
    vortex_closed_form,
    vortex_scan,
    write_curve_csv,
    write_snapshot_csv,
)

W0 = 1.0


def test_lg00_on_axis_value():
    assert abs(lg_amplitude(LGModeSpec(0, 0, W0), 0.0, 0.0) - np.sqrt(2 / np.pi)) < 1e-14


def test_lg_vortex_has_zero_on_axis_and_winding():
    spec = LGModeSpec(0, 1, W0)
    assert lg_amplitude(spec, 0.0, 0.0) == 0
    a = lg_amplitude(spec, 0.5, 0.0)
    b = lg_amplitude(spec, 0.0, 0.5)
    assert abs(np.angle(b / a) - np.pi / 2) < 1e-12


@pytest.mark.parametrize("p,m", [(0, 0), (0, 1), (1, -2), (2, 1)])
def test_lg_norm_independent_quadrature(p, m):
    spec = LGModeSpec(p, m, W0)
    val, _ = dblquad(lambda r, t: abs(lg_amplitude(spec, r * np.cos(t), r * np.sin(t))) ** 2 * r,
                     0, 2 * np.pi, 0, 10)
    assert abs(val - 1) < 1e-6


def test_lg_orthonormality_grid():
    modes = [LGModeSpec(p, m, W0) for p in range(3) for m in range(-2, 3)]
    grid = QuadratureGrid(samples_per_axis=256)
    for a in modes:
        for b in modes:
            v = overlap(lg_field(a), b, grid)
            assert abs(v - (1.0 if a == b else 0.0)) < 1e-10


def test_invalid_mode_specs():
    with pytest.raises(ValueError):
        LGModeSpec(-1, 0, 1.0)
    with pytest.raises(ValueError):
        LGModeSpec(0, 0, 0.0)


def test_mask_values():
    v = PhaseMask.vortex()
    assert v(0.0, 0.0) == 1
    assert abs(v(0.0, 1.0) - 1j) < 1e-15
    s = PhaseMask.step(0.2)
    assert abs(s(1.0, 0.0) - 1j) < 1e-15 and abs(s(-1.0, 0.0) + 1j) < 1e-15
    assert abs(PhaseMask.uniform(0.3)(5.0, 5.0) - np.exp(0.3j)) < 1e-15
    with pytest.raises(ValueError):
        PhaseMask("ramp")


def test_masks_are_pure_phase(rng):
    x, y = rng.uniform(-5, 5, (2, 10_000))
    for m in (PhaseMask.vortex(0.3, -0.2, charge=2), PhaseMask.step(0.4), PhaseMask.uniform(1.0),
              PhaseMask.vortex(pixel_size=0.05)):
        assert np.max(np.abs(np.abs(m(x, y)) - 1)) < 1e-14


def test_masked_power_conserved():
    # |E T|^2 == |E|^2 integrated on a fine Cartesian Simpson-free Riemann grid
    x = np.linspace(-7, 7, 701)
    xx, yy = np.meshgrid(x, x)
    beam = lg_field(LGModeSpec(1, 1, W0)) + lg_field(LGModeSpec(0, 0, W0))
    e0 = np.sum(np.abs(beam(xx, yy)) ** 2)
    for m in (PhaseMask.vortex(0.4, 0.1), PhaseMask.step(-0.3)):
        e1 = np.sum(np.abs(apply_mask(beam, m)(xx, yy)) ** 2)
        assert abs(e1 / e0 - 1) < 1e-8


def test_vortex_converts_gaussian_to_lg01_pi_over_4():
    eff = conversion_efficiency(LGModeSpec(0, 0, W0), PhaseMask.vortex(), W0, target=LGModeSpec(0, 1, W0))
    assert abs(eff - np.pi / 4) < 1e-4


def test_centered_vortex_kills_gaussian():
    assert vortex_scan(W0, [0.0])[0] < 1e-8


def test_vortex_far_away_passes_gaussian():
    assert vortex_scan(W0, [10 * W0])[0] > 0.99


def test_vortex_richardson_oracle():
    g1 = QuadratureGrid(samples_per_axis=1024)
    g2 = QuadratureGrid(samples_per_axis=2048)
    ref = richardson(vortex_scan(W0, [W0], grid=g1), vortex_scan(W0, [W0], grid=g2))[0]
    assert abs(vortex_scan(W0, [W0])[0] - ref) < 1e-4
    assert abs(ref - vortex_closed_form(W0, W0)) < 1e-6


def test_vortex_closed_form_agrees_with_quadrature():
    s = np.array([0.25, 0.5, 1.5, 2.5]) * W0
    np.testing.assert_allclose(vortex_scan(W0, s), vortex_closed_form(W0, s), atol=1e-5)
    # diagonal path: distance s * sqrt2 from the axis
    np.testing.assert_allclose(vortex_scan(W0, s, path="diagonal"), vortex_closed_form(W0, np.sqrt(2) * s), atol=1e-5)


def test_step_closed_form_reference_value():
    assert abs(step_closed_form(W0, W0 / 2) - 0.466065) < 1e-6
    assert step_closed_form(W0, 0.0) == 0


def test_step_scan_matches_closed_form():
    x0 = np.linspace(-3 * W0, 3 * W0, 13)
    np.testing.assert_allclose(step_scan(W0, x0), step_closed_form(W0, x0), atol=1e-6)


def test_step_scan_other_waist():
    w = 2.2
    x0 = np.array([-1.0, 0.3, 2.0])
    np.testing.assert_allclose(step_scan(w, x0), step_closed_form(w, x0), atol=1e-6)


def test_vortex_curve_even_and_monotone():
    s = np.linspace(0, 3 * W0, 13)
    right = vortex_scan(W0, s)
    left = vortex_scan(W0, -s)
    # mirrored grids differ only by quadrature error (~1e-7)
    assert np.max(np.abs(right - left)) < 1e-6
    assert np.all(np.diff(right) > 0)
    diag = vortex_scan(W0, s[:7], path="diagonal")
    assert np.max(np.abs(diag - vortex_scan(W0, -s[:7], path="diagonal"))) < 1e-6
    assert np.all(np.diff(diag) > 0)


def test_grid_doubling_gap():
    s = [0.0, 0.7, 1.9]
    assert convergence_gap(lambda g: vortex_scan(W0, s, grid=g)) < 1e-5
    assert convergence_gap(lambda g: step_scan(W0, s, grid=g)) < 1e-5


def test_small_window_rejected():
    with pytest.raises(GridError):
        vortex_scan(W0, [0.5], grid=QuadratureGrid(half_extent=5.0))
    with pytest.raises(GridError):
        overlap(lg_field(LGModeSpec()), LGModeSpec(), QuadratureGrid(samples_per_axis=63))


def test_non_finite_displacement_rejected():
    with pytest.raises(ValueError):
        vortex_scan(W0, [np.nan])


def test_pixelated_mask_close_to_exact():
    fine = conversion_efficiency(LGModeSpec(0, 0, W0), PhaseMask.step(0.3, pixel_size=0.01), W0)
    assert abs(fine - step_closed_form(W0, 0.3)) < 1e-2


def test_grating_scale():
    assert grating_efficiency_scale(1.0) == 0.25
    assert abs(grating_efficiency_scale(np.pi / 4) - np.pi / 16) < 1e-15
    with pytest.raises(ValueError):
        grating_efficiency_scale(1.2)


def test_superposed_vortex_beam_through_step():
    beam = (lg_field(LGModeSpec(0, -1, W0)) + lg_field(LGModeSpec(0, 1, W0))) / np.sqrt(2)
    x0 = np.linspace(-1.5, 1.5, 7)
    g = np.array([gaussian_component(apply_mask(beam, PhaseMask.step(x)), W0) for x in x0])
    assert np.argmax(g) == 3
    assert abs(g[3] - 2 / np.pi) < 1e-5
    np.testing.assert_allclose(g, g[::-1], atol=1e-8)


def test_peak_normalized():
    np.testing.assert_allclose(peak_normalized([0.1, 0.4, 0.2]), [0.25, 1.0, 0.5])


def test_curve_csv_round_trip(tmp_path):
    s = np.linspace(-1, 1, 9)
    v = vortex_closed_form(W0, s)
    write_curve_csv(tmp_path / "c.csv", s, v)
    s2, v2 = read_curve_csv(tmp_path / "c.csv")
    assert np.array_equal(s, s2) and np.array_equal(v, v2)
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "s,gaussian_component"


def test_snapshot_csv(tmp_path):
    x, y, inten, ph = field_snapshot(lg_field(LGModeSpec(0, 1, W0)), n=21)
    assert inten.shape == (21, 21) and inten[10, 10] < 1e-30
    write_snapshot_csv(tmp_path / "f.csv", x, y, inten, ph)
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "x,y,intensity,phase" and len(lines) == 1 + 21 * 21


def test_field_algebra():
    f = lg_field(LGModeSpec(0, 0, W0)) * 2
    assert abs(f(0.0, 0.0) - 2 * np.sqrt(2 / np.pi)) < 1e-14
    with pytest.raises(ValueError):
        apply_mask(f, PhaseMask.uniform()) + f
    assert isinstance(f / 2, Field)
