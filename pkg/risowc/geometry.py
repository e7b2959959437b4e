##
## Name:     geometry.py
## Purpose:  Placement of transmitter, RIS pixels and receiver.
##
## The transmitter and receiver are points in space; the RIS is a
## planar array of N rectangular pixels lying on the plane z = d_TR,
## each identified by the (x, y) position of its centre.  From these we
## derive, per pixel and per hop, the propagation distance and the
## off-axis direction cosines measured against the RIS-plane normal
## (the +z axis).  The default layout is a square grid centred on the
## z axis, indexed in row-major order.
##
import logging
from dataclasses import dataclass, replace

import numpy as np

from .rerror import ConfigurationError

log = logging.getLogger(__name__)


def square_layout(rows, cols, pitch):
    """Return an (rows*cols, 2) array of pixel centres on a square grid
    of the given pitch, centred at (0, 0), in row-major order (x varies
    fastest along a row, rows advance along y).

    rows   -- number of rows (int).
    cols   -- number of columns (int).
    pitch  -- centre-to-centre spacing (m).
    """
    if rows < 1 or cols < 1:
        raise ConfigurationError("grid must have at least one pixel",
                                 "geometry.grid")
    if pitch <= 0:
        raise ConfigurationError("lattice pitch must be positive",
                                 "geometry.lattice_pitch")

    xs = (np.arange(cols) - (cols - 1) / 2.0) * pitch
    ys = (np.arange(rows) - (rows - 1) / 2.0) * pitch
    yy, xx = np.meshgrid(ys, xs, indexing='ij')
    return np.column_stack((xx.ravel(), yy.ravel()))


@dataclass(frozen=True)
class ScenarioGeometry(object):
    """Positions of the three node sets and the pixel dimensions.

    tx_position    -- transmitter (x, y, z) (m).
    ris_plane_z    -- z coordinate of the RIS plane, d_TR for a
                      transmitter at the origin (m).
    pixel_centers  -- (N, 2) array of pixel centres on the RIS plane (m).
    rx_position    -- receiver (x, y, z) (m); must lie beyond the RIS.
    lattice_pitch  -- grid pitch p (m).
    pixel_width    -- pixel size along x, Delta x (m).
    pixel_height   -- pixel size along y, Delta y (m).
    wavelength     -- optical wavelength lambda (m).
    """
    tx_position: tuple
    ris_plane_z: float
    pixel_centers: np.ndarray
    rx_position: tuple
    lattice_pitch: float
    pixel_width: float
    pixel_height: float
    wavelength: float

    def __post_init__(self):
        object.__setattr__(self, 'tx_position',
                           np.asarray(self.tx_position, dtype=float))
        object.__setattr__(self, 'rx_position',
                           np.asarray(self.rx_position, dtype=float))
        object.__setattr__(self, 'pixel_centers',
                           np.atleast_2d(np.asarray(self.pixel_centers,
                                                    dtype=float)))
        self.validate()

    @classmethod
    def grid(cls, rows, cols, pitch, ris_distance, rx_position,
             pixel_width, pixel_height, wavelength, tx_position=(0, 0, 0)):
        """Construct a geometry using the default square layout, with
        the RIS plane at ris_distance beyond the transmitter.
        """
        tx = np.asarray(tx_position, dtype=float)
        return cls(tx_position=tx,
                   ris_plane_z=tx[2] + ris_distance,
                   pixel_centers=square_layout(rows, cols, pitch),
                   rx_position=rx_position,
                   lattice_pitch=pitch,
                   pixel_width=pixel_width,
                   pixel_height=pixel_height,
                   wavelength=wavelength)

    def validate(self):
        """Check the geometry invariants; raises ConfigurationError."""
        if self.tx_position.shape != (3, ) or self.rx_position.shape != (3, ):
            raise ConfigurationError("positions must be 3-vectors",
                                     "geometry.position")
        if self.pixel_centers.ndim != 2 or self.pixel_centers.shape[1] != 2:
            raise ConfigurationError("pixel centres must be (N, 2)",
                                     "geometry.pixel_centers")
        if self.rx_position[2] <= self.ris_plane_z:
            raise ConfigurationError(
                "receiver must lie beyond the RIS plane (z_R > d_TR)",
                "geometry.rx_position_m")
        if self.tx_position[2] >= self.ris_plane_z:
            raise ConfigurationError(
                "transmitter must lie before the RIS plane",
                "geometry.ris_distance_m")
        for key, value in (('pixel_width', self.pixel_width),
                           ('pixel_height', self.pixel_height),
                           ('wavelength', self.wavelength),
                           ('lattice_pitch', self.lattice_pitch)):
            if not value > 0:
                raise ConfigurationError("must be positive",
                                         "geometry." + key)
        uniq = np.unique(self.pixel_centers, axis=0)
        if len(uniq) != len(self.pixel_centers):
            raise ConfigurationError("pixel centres must be distinct",
                                     "geometry.pixel_centers")

    @property
    def n_pixels(self):
        return len(self.pixel_centers)

    @property
    def ris_distance(self):
        """Axial distance d_TR from the transmitter to the RIS plane."""
        return self.ris_plane_z - self.tx_position[2]

    def pixel_positions(self):
        """Return the (N, 3) array of pixel centres in space."""
        z = np.full((self.n_pixels, 1), self.ris_plane_z)
        return np.hstack((self.pixel_centers, z))

    def shifted(self, offset):
        """Return a copy of this geometry translated by a 3-vector."""
        offset = np.asarray(offset, dtype=float)
        return replace(self,
                       tx_position=self.tx_position + offset,
                       ris_plane_z=self.ris_plane_z + offset[2],
                       pixel_centers=self.pixel_centers + offset[:2],
                       rx_position=self.rx_position + offset)


@dataclass(frozen=True)
class HopGeometry(object):
    """Per-pixel hop distances and, once computed, direction cosines.

    d_tr   -- (N,) distance transmitter -> pixel (m).
    d_rr   -- (N,) distance pixel -> receiver (m).
    mu_tr  -- (N, 2) direction cosines (mu_x, mu_y) of the TR hop, or None.
    mu_rr  -- (N, 2) direction cosines of the RR hop, or None.
    """
    d_tr: np.ndarray
    d_rr: np.ndarray
    mu_tr: np.ndarray = None
    mu_rr: np.ndarray = None


def hop_distances(geom):
    """Return a HopGeometry holding only the per-pixel distances
    d_tr[n] = |p_n - p_T| and d_rr[n] = |p_R - p_n|.
    """
    pixels = geom.pixel_positions()
    d_tr = np.linalg.norm(pixels - geom.tx_position, axis=1)
    d_rr = np.linalg.norm(geom.rx_position - pixels, axis=1)
    log.debug('[hop distances for %d pixels: TR %.6g..%.6g m, '
              'RR %.6g..%.6g m]', geom.n_pixels, d_tr.min(), d_tr.max(),
              d_rr.min(), d_rr.max())
    return HopGeometry(d_tr=d_tr, d_rr=d_rr)


def direction_cosines(geom, hops=None):
    """Return a HopGeometry with distances and the direction cosines of
    both hops.  For the TR hop mu = (p_n - p_T)[x, y] / d_tr[n]; for the
    RR hop mu = (p_R - p_n)[x, y] / d_rr[n].  The reference normal is
    the fixed RIS-plane normal, not a per-pixel tilted normal.

    hops  -- distances from hop_distances(geom), if already computed.
    """
    if hops is None:
        hops = hop_distances(geom)

    pixels = geom.pixel_positions()
    mu_tr = (pixels - geom.tx_position)[:, :2] / hops.d_tr[:, None]
    mu_rr = (geom.rx_position - pixels)[:, :2] / hops.d_rr[:, None]
    return replace(hops, mu_tr=mu_tr, mu_rr=mu_rr)


__all__ = [
    "ScenarioGeometry", "HopGeometry", "square_layout", "hop_distances",
    "direction_cosines"
]

# Here there be dragons
