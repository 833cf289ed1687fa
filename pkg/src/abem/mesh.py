"""Bisection meshes on a boundary curve.

A mesh is an ordered partition of the curve into arc-length intervals.  Every
element is a node of the infinite binary tree rooted at one element of the
initial mesh and is addressed by ``(root, generation, position)``; bisection
always splits at the exact arc-length midpoint.  That addressing gives every
element a stable integer id shared by all meshes refined from the same
initial mesh, so set algebra between meshes (marked sets, common elements,
refined elements) is plain id arithmetic.

Refinement keeps the generation gap between neighboring elements at most one
by force-bisecting too-coarse neighbors (closure).  Consequently the local
mesh ratio never exceeds twice the ratio of the initial mesh.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .geometry import Geometry

_MAX_GEN = 62  # position indices must stay below 2**63 for int64 storage


@dataclass(frozen=True, eq=False)
class Mesh:
    """Ordered partition of a geometry into dyadic arc-length intervals.

    Attributes
    ----------
    geometry : Geometry
    init_breaks : np.ndarray, shape (n0 + 1,)
        Arc-length breakpoints of the initial mesh (family fingerprint).
    init_edge : np.ndarray, shape (n0,)
        Geometry edge containing each initial element.
    root : np.ndarray, shape (N,)
        Initial element each element descends from.
    gen : np.ndarray, shape (N,)
        Bisection generation (0 on the initial mesh).
    pos : np.ndarray, shape (N,)
        Position among the ``2**gen`` descendants of the root element.
    """

    geometry: Geometry
    init_breaks: np.ndarray
    init_edge: np.ndarray
    root: np.ndarray
    gen: np.ndarray
    pos: np.ndarray
    # Derived geometry arrays.
    t0: np.ndarray = field(init=False, repr=False)
    t1: np.ndarray = field(init=False, repr=False)
    lengths: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("root", "gen", "pos"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            object.__setattr__(self, name, arr)
        if self.gen.size and int(self.gen.max()) > _MAX_GEN:
            raise ValueError(f"refinement deeper than generation {_MAX_GEN}")
        T0 = self.init_breaks[self.root]
        dT = self.init_breaks[self.root + 1] - T0
        scale = np.ldexp(1.0, -self.gen)  # exact powers of two
        x0 = self.pos * scale
        x1 = (self.pos + 1) * scale
        t0 = T0 + dT * x0
        # Force exact abutment with the next initial element at x1 == 1.
        t1 = np.where(x1 == 1.0, self.init_breaks[self.root + 1], T0 + dT * x1)
        object.__setattr__(self, "t0", t0)
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "lengths", dT * scale)
        self._validate()

    # ------------------------------------------------------------------
    # invariants
    # ------------------------------------------------------------------
    def _validate(self):
        n = len(self.root)
        if n == 0:
            raise ValueError("mesh has no elements")
        if not (self.t0[0] == self.init_breaks[0] and self.t1[-1] == self.init_breaks[-1]):
            raise ValueError("mesh does not span the curve")
        if n > 1 and not np.array_equal(self.t1[:-1], self.t0[1:]):
            raise ValueError("elements do not abut exactly")
        gaps = np.abs(np.diff(self.gen))
        if self.geometry.closed and n > 1:
            gaps = np.append(gaps, abs(int(self.gen[-1]) - int(self.gen[0])))
        if gaps.size and int(gaps.max()) > 1:
            raise ValueError("neighboring generations differ by more than 1")

    # ------------------------------------------------------------------
    # identity
    # ------------------------------------------------------------------
    @property
    def n_elements(self) -> int:
        return len(self.root)

    @property
    def n_initial(self) -> int:
        return len(self.init_breaks) - 1

    def element_ids(self) -> list[int]:
        """Stable ids, ordered along the curve."""
        nI = self.n_initial
        return [
            ((1 << int(g)) + int(p)) * nI + int(r)
            for r, g, p in zip(self.root, self.gen, self.pos)
        ]

    def id_set(self) -> frozenset[int]:
        return frozenset(self.element_ids())

    def parent_ids(self) -> list[int]:
        """Parent id per element, -1 on the initial mesh."""
        nI = self.n_initial
        out = []
        for r, g, p in zip(self.root, self.gen, self.pos):
            if g == 0:
                out.append(-1)
            else:
                out.append(((1 << (int(g) - 1)) + int(p) // 2) * nI + int(r))
        return out

    def family_key(self) -> tuple:
        return (
            self.geometry.vertices.tobytes(),
            self.geometry.closed,
            self.init_breaks.tobytes(),
        )

    def edge_indices(self) -> np.ndarray:
        """Geometry edge containing each element."""
        return self.init_edge[self.root]

    def endpoints_xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Plane coordinates of the element endpoints, shapes (N, 2)."""
        edges = self.edge_indices()
        return (
            self.geometry.points_at(self.t0, edges),
            self.geometry.points_at(self.t1, edges),
        )

    def ancestor_id(self, index: int, up: int) -> int:
        """Id of the ancestor ``up`` generations above element ``index``."""
        g = int(self.gen[index]) - up
        if g < 0:
            raise ValueError("no ancestor that far up")
        p = int(self.pos[index]) >> up
        return ((1 << g) + p) * self.n_initial + int(self.root[index])


# ----------------------------------------------------------------------
# construction and refinement
# ----------------------------------------------------------------------
def make_initial_mesh(geometry: Geometry, n0: int) -> Mesh:
    """Partition the curve into ``n0`` generation-0 elements.

    Every geometry vertex becomes an element endpoint, so ``n0`` must be at
    least the number of edges.  Elements are distributed proportionally to
    edge length (longest current piece first) and are uniform within each
    edge.
    """
    if n0 < 1:
        raise ValueError("n0 must be at least 1")
    n_edges = geometry.n_edges
    if n0 < n_edges:
        raise ValueError(
            f"n0={n0} too small: every geometry vertex must be an element "
            f"endpoint, which needs at least {n_edges} elements"
        )
    counts = [1] * n_edges
    for _ in range(n0 - n_edges):
        piece = geometry.edge_lengths / counts
        counts[int(np.argmax(piece))] += 1

    breaks = [0.0]
    edge_of_init = []
    for e in range(n_edges):
        a = geometry.cum_lengths[e]
        b = geometry.cum_lengths[e + 1]
        for k in range(1, counts[e]):
            breaks.append(a + (b - a) * (k / counts[e]))
        breaks.append(b)
        edge_of_init.extend([e] * counts[e])

    n = len(breaks) - 1
    return Mesh(
        geometry=geometry,
        init_breaks=np.asarray(breaks, dtype=float),
        init_edge=np.asarray(edge_of_init, dtype=np.int64),
        root=np.arange(n, dtype=np.int64),
        gen=np.zeros(n, dtype=np.int64),
        pos=np.zeros(n, dtype=np.int64),
    )


def _neighbors(mesh: Mesh, index: int) -> list[int]:
    n = mesh.n_elements
    out = []
    if index > 0:
        out.append(index - 1)
    elif mesh.geometry.closed and n > 1:
        out.append(n - 1)
    if index < n - 1:
        out.append(index + 1)
    elif mesh.geometry.closed and n > 1:
        out.append(0)
    return out


def refine(mesh: Mesh, marked) -> Mesh:
    """Bisect the marked elements plus the closure needed to keep the mesh valid.

    ``marked`` is a set of element ids of ``mesh``.  Each element in the
    resulting bisection set is split exactly once into two sons of half
    length; a neighbor is pulled into the set whenever its generation is
    below that of an element being split, which keeps neighboring
    generations within one of each other.
    """
    marked = set(marked)
    if not marked:
        return mesh
    id_to_index = {eid: k for k, eid in enumerate(mesh.element_ids())}
    unknown = marked - id_to_index.keys()
    if unknown:
        raise ValueError(f"marked ids not in mesh: {sorted(unknown)[:5]}")

    split = {id_to_index[eid] for eid in marked}
    queue = list(split)
    gen = mesh.gen
    while queue:
        i = queue.pop()
        for j in _neighbors(mesh, i):
            if j not in split and gen[j] < gen[i]:
                split.add(j)
                queue.append(j)

    root, g, p = [], [], []
    for k in range(mesh.n_elements):
        if k in split:
            root.extend([mesh.root[k]] * 2)
            g.extend([mesh.gen[k] + 1] * 2)
            p.extend([2 * mesh.pos[k], 2 * mesh.pos[k] + 1])
        else:
            root.append(mesh.root[k])
            g.append(mesh.gen[k])
            p.append(mesh.pos[k])
    return Mesh(
        geometry=mesh.geometry,
        init_breaks=mesh.init_breaks,
        init_edge=mesh.init_edge,
        root=np.asarray(root),
        gen=np.asarray(g),
        pos=np.asarray(p),
    )


def uniform_refine(mesh: Mesh) -> Mesh:
    """Bisect every element once."""
    return refine(mesh, mesh.id_set())


def overlay(a: Mesh, b: Mesh) -> Mesh:
    """Coarsest common refinement of two meshes from the same initial mesh.

    At every point of the curve the overlay carries the finer of the two
    local partitions; each overlay element therefore exists in ``a`` or in
    ``b`` (dyadic intervals from one root are nested or disjoint).
    """
    if a.family_key() != b.family_key():
        raise ValueError("overlay requires meshes from the same initial mesh")
    root, g, p = [], [], []
    i = j = 0
    while i < a.n_elements and j < b.n_elements:
        # Identical spans: the deeper element is contained in the other.
        if a.gen[i] >= b.gen[j]:
            src, k = a, i
        else:
            src, k = b, j
        root.append(src.root[k])
        g.append(src.gen[k])
        p.append(src.pos[k])
        end = src.t1[k]
        while i < a.n_elements and a.t1[i] <= end:
            i += 1
        while j < b.n_elements and b.t1[j] <= end:
            j += 1
    return Mesh(
        geometry=a.geometry,
        init_breaks=a.init_breaks,
        init_edge=a.init_edge,
        root=np.asarray(root),
        gen=np.asarray(g),
        pos=np.asarray(p),
    )


def is_refinement_of(fine: Mesh, coarse: Mesh) -> bool:
    """True when every element of ``fine`` descends from one of ``coarse``."""
    if fine.family_key() != coarse.family_key():
        return False
    coarse_ids = coarse.id_set()
    for k in range(fine.n_elements):
        g = int(fine.gen[k])
        found = False
        for up in range(g + 1):
            if fine.ancestor_id(k, up) in coarse_ids:
                found = True
                break
        if not found:
            return False
    return True


# ----------------------------------------------------------------------
# diagnostics and serialization
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class MeshStats:
    n_elements: int
    min_length: float
    max_length: float
    mesh_ratio: float


def mesh_stats(mesh: Mesh) -> MeshStats:
    """Element count, length extremes and the local mesh ratio.

    The ratio is the maximum of ``|T| / |T'|`` over touching element pairs
    (including the wrap-around pair on closed curves).
    """
    lengths = mesh.lengths
    ratio = 1.0
    if mesh.n_elements > 1:
        pair = lengths[:-1] / lengths[1:]
        ratio = float(np.max(np.maximum(pair, 1.0 / pair)))
        if mesh.geometry.closed:
            wrap = lengths[-1] / lengths[0]
            ratio = max(ratio, wrap, 1.0 / wrap)
    return MeshStats(
        n_elements=mesh.n_elements,
        min_length=float(lengths.min()),
        max_length=float(lengths.max()),
        mesh_ratio=ratio,
    )


def dump_mesh(mesh: Mesh) -> str:
    """Plain-text dump, one line per element: id parent_id generation t_start t_end."""
    buf = io.StringIO()
    parents = mesh.parent_ids()
    for eid, pid, g, ta, tb in zip(
        mesh.element_ids(), parents, mesh.gen, mesh.t0, mesh.t1
    ):
        buf.write(f"{eid} {pid} {int(g)} {float(ta)!r} {float(tb)!r}\n")
    return buf.getvalue()
