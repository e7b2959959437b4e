import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risowc.geometry import (ScenarioGeometry, square_layout, hop_distances,
                             direction_cosines)
from risowc.rerror import ConfigurationError


def make_geometry(centers, rx=(0.0, 0.0, 2500.0), d=1000.0):
    return ScenarioGeometry(tx_position=(0.0, 0.0, 0.0),
                            ris_plane_z=d,
                            pixel_centers=centers,
                            rx_position=rx,
                            lattice_pitch=0.02,
                            pixel_width=2e-3,
                            pixel_height=2e-3,
                            wavelength=1.55e-6)


def test_on_axis_distances():
    hg = hop_distances(make_geometry([(0.0, 0.0)]))
    assert hg.d_tr[0] == pytest.approx(1000.0, rel=1e-15)
    assert hg.d_rr[0] == pytest.approx(1500.0, rel=1e-15)


def test_offset_pixel_distance():
    hg = hop_distances(make_geometry([(3.0, 4.0)]))
    assert hg.d_tr[0] == pytest.approx(math.sqrt(1e6 + 25), rel=1e-15)


def test_direction_cosines_signs():
    hg = direction_cosines(make_geometry([(1.0, 0.0)]))
    assert hg.mu_tr[0, 0] == pytest.approx(1 / math.sqrt(1e6 + 1), rel=1e-12)
    assert hg.mu_tr[0, 1] == 0
    assert hg.mu_rr[0, 0] == pytest.approx(-1 / math.sqrt(1500**2 + 1),
                                           rel=1e-12)


def test_receiver_must_lie_beyond_ris():
    with pytest.raises(ConfigurationError) as e:
        make_geometry([(0.0, 0.0)], rx=(0.0, 0.0, 900.0))
    assert e.value.key == 'geometry.rx_position_m'


def test_duplicate_centres_rejected():
    with pytest.raises(ConfigurationError):
        make_geometry([(0.0, 0.0), (0.0, 0.0)])


def test_square_layout_row_major():
    c = square_layout(2, 3, 1.0)
    assert c.shape == (6, 2)
    np.testing.assert_allclose(c[:3, 0], [-1.0, 0.0, 1.0])
    np.testing.assert_allclose(c[:3, 1], [-0.5, -0.5, -0.5])
    np.testing.assert_allclose(c[3:, 1], [0.5, 0.5, 0.5])
    np.testing.assert_allclose(c.mean(axis=0), [0.0, 0.0], atol=1e-15)


def test_grid_is_centro_symmetric():
    geom = ScenarioGeometry.grid(8, 8, 0.02, 1000.0, (0, 0, 2500), 2e-3,
                                 2e-3, 1.55e-6)
    hg = direction_cosines(geom)
    np.testing.assert_allclose(hg.mu_tr[::-1], -hg.mu_tr, atol=1e-15)
    np.testing.assert_allclose(hg.mu_rr[::-1], -hg.mu_rr, atol=1e-15)


def test_distance_identity_on_axis_transmitter():
    geom = ScenarioGeometry.grid(4, 4, 0.02, 1000.0, (0, 0, 2500), 2e-3,
                                 2e-3, 1.55e-6)
    hg = hop_distances(geom)
    c = geom.pixel_centers
    np.testing.assert_allclose(hg.d_tr**2,
                               1000.0**2 + c[:, 0]**2 + c[:, 1]**2,
                               rtol=1e-14)


offsets = st.tuples(*[st.floats(-1e3, 1e3, allow_nan=False)] * 3)


@settings(max_examples=50, deadline=None)
@given(offsets)
def test_translation_invariance(offset):
    geom = ScenarioGeometry.grid(3, 3, 0.02, 1000.0, (0.5, -0.2, 2500), 2e-3,
                                 2e-3, 1.55e-6)
    a = direction_cosines(geom)
    b = direction_cosines(geom.shifted(offset))
    np.testing.assert_allclose(b.d_tr, a.d_tr, rtol=1e-12)
    np.testing.assert_allclose(b.d_rr, a.d_rr, rtol=1e-12)
    np.testing.assert_allclose(b.mu_tr, a.mu_tr, atol=1e-12)
    np.testing.assert_allclose(b.mu_rr, a.mu_rr, atol=1e-12)
