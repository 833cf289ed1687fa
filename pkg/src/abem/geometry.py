"""Boundary curves for the 2D solver.

The boundary is a closed polygon or an open polyline in the plane with an
arc-length parametrization.  All kernels assume a vertex set of diameter
below one (log-kernel ellipticity), so construction rejects larger curves;
``Geometry.scaled_to_unit_diameter`` rescales arbitrary input instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class Geometry:
    """Polygonal boundary curve parametrized by arc length.

    Parameters
    ----------
    vertices : np.ndarray, shape (V, 2)
        Corner points in order.  For a closed curve the last edge runs from
        the final vertex back to the first one; do not repeat the first
        vertex.
    closed : bool
        Closed polygon versus open polyline (arc with two tips).
    scale_factor : float
        Factor already applied to the input coordinates (1.0 if none).
    """

    vertices: np.ndarray
    closed: bool
    scale_factor: float = 1.0
    # Derived, filled in __post_init__.
    edge_lengths: np.ndarray = field(init=False, repr=False)
    cum_lengths: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise ValueError(f"vertices must have shape (V, 2), got {verts.shape}")
        if len(verts) < (3 if self.closed else 2):
            raise ValueError("need at least 2 vertices (3 for a closed polygon)")
        if self.closed and np.allclose(verts[0], verts[-1]):
            verts = verts[:-1]
            if len(verts) < 3:
                raise ValueError("closed polygon needs 3 distinct vertices")
        object.__setattr__(self, "vertices", verts)

        starts = verts
        ends = np.roll(verts, -1, axis=0) if self.closed else verts[1:]
        if not self.closed:
            starts = verts[:-1]
        edge_vec = ends - starts
        lengths = np.hypot(edge_vec[:, 0], edge_vec[:, 1])
        if np.any(lengths <= 0.0):
            raise ValueError("consecutive vertices must be distinct")

        diff = verts[:, None, :] - verts[None, :, :]
        diam = float(np.sqrt((diff**2).sum(-1)).max())
        if diam >= 1.0:
            raise ValueError(
                f"vertex set diameter {diam:.6g} >= 1; "
                "rescale first (see Geometry.scaled_to_unit_diameter)"
            )

        object.__setattr__(self, "edge_lengths", lengths)
        object.__setattr__(
            self, "cum_lengths", np.concatenate([[0.0], np.cumsum(lengths)])
        )

    @classmethod
    def scaled_to_unit_diameter(cls, vertices, closed: bool) -> "Geometry":
        """Build a geometry, shrinking the coordinates when the diameter is >= 1.

        The applied factor (0.8 / diameter) is recorded in ``scale_factor``.
        """
        verts = np.asarray(vertices, dtype=float)
        diff = verts[:, None, :] - verts[None, :, :]
        diam = float(np.sqrt((diff**2).sum(-1)).max())
        factor = 1.0
        if diam >= 1.0:
            factor = 0.8 / diam
            verts = verts * factor
        return cls(vertices=verts, closed=closed, scale_factor=factor)

    @property
    def n_edges(self) -> int:
        return len(self.edge_lengths)

    @property
    def total_length(self) -> float:
        return float(self.cum_lengths[-1])

    @property
    def diameter(self) -> float:
        diff = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())

    def edge_endpoints(self, edge: int) -> tuple[np.ndarray, np.ndarray]:
        """Start and end point of one straight edge."""
        v = self.vertices
        a = v[edge]
        b = v[(edge + 1) % len(v)] if self.closed else v[edge + 1]
        return a, b

    def points_at(self, t, edge_hint=None) -> np.ndarray:
        """Map arc-length values to plane coordinates.

        ``edge_hint`` (same shape as ``t``) pins each value to a specific
        edge, which disambiguates vertices shared by two edges and avoids a
        search.
        """
        t = np.asarray(t, dtype=float)
        if edge_hint is None:
            edge = np.clip(
                np.searchsorted(self.cum_lengths, t, side="right") - 1,
                0,
                self.n_edges - 1,
            )
        else:
            edge = np.asarray(edge_hint)
        v = self.vertices
        a = v[edge]
        nxt = (edge + 1) % len(v) if self.closed else edge + 1
        b = v[nxt]
        frac = (t - self.cum_lengths[edge]) / self.edge_lengths[edge]
        return a + frac[..., None] * (b - a)

    def is_single_straight_edge(self) -> bool:
        """True for a flat open arc (a single segment)."""
        return (not self.closed) and self.n_edges == 1


def slit_geometry(length: float = 0.8) -> Geometry:
    """Open straight arc of the given length, centered at the origin."""
    half = 0.5 * length
    return Geometry(np.array([[-half, 0.0], [half, 0.0]]), closed=False)


def square_geometry(side: float = 0.2) -> Geometry:
    """Closed square boundary with the given side length."""
    s = side
    return Geometry(
        np.array([[0.0, 0.0], [s, 0.0], [s, s], [0.0, s]]), closed=True
    )
