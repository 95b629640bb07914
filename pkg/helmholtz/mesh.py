#!/usr/bin/env python

"""
Cartesian meshes of cuboidal elements and degree-of-freedom maps

Elements are numbered e = e1 + ne1*(e2 + ne2*e3). Global nodes live on the
lattice g_k = e_k*p + i_k and are numbered entity by entity: vertices, then
edges, then faces, then element interiors, each ordered by position
(g3, g2, g1). The first n_condensed global ids are therefore exactly the
element-boundary nodes, and the condensed system is a prefix of the full one.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt

from .basis import Basis1D
from .helpers import HelmholtzError

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]
BoolArray = npt.NDArray[np.bool_]

Interval = Tuple[float, float]

# Metric coefficients (d0, d1, d2, d3), shape (4,) or (n_e, 4)
MetricCoefficients = Array

# Faces in compass notation: (name, normal direction, side index)
FACES: List[Tuple[str, int, int]] = [
    ("w", 1, 0),
    ("e", 1, -1),
    ("s", 2, 0),
    ("n", 2, -1),
    ("b", 3, 0),
    ("t", 3, -1),
]

# Compass letters per direction for the low and the high side
_COMPASS = {1: ("w", "e"), 2: ("s", "n"), 3: ("b", "t")}

# Entity kinds by the number of lattice coordinates on element planes
VERTEX, EDGE, FACE, INTERIOR = 3, 2, 1, 0


class MeshError(HelmholtzError):
    pass


@dataclass(frozen=True)
class CartesianMesh:
    """
    Tensor-product mesh of ne1 x ne2 x ne3 cuboids

    breakpoints[k] holds the ne_k + 1 element interfaces in direction k + 1.
    """

    counts: Tuple[int, int, int]
    breakpoints: Tuple[Array, Array, Array]
    domain: Tuple[Interval, Interval, Interval]
    alpha: float

    @property
    def n_elements(self) -> int:
        return int(np.prod(self.counts))

    def widths(self, direction: int) -> Array:
        return np.diff(self.breakpoints[direction - 1])

    @property
    def positions(self) -> IntArray:
        """Element lattice positions (e1, e2, e3), shape (n_e, 3)"""
        ne1, ne2, ne3 = self.counts
        e3, e2, e1 = np.meshgrid(
            np.arange(ne3), np.arange(ne2), np.arange(ne1), indexing="ij"
        )
        return np.stack([e1.ravel(), e2.ravel(), e3.ravel()], axis=1)

    @property
    def extents(self) -> Array:
        """Element extents (h1, h2, h3), shape (n_e, 3)"""
        pos = self.positions
        return np.stack([self.widths(k + 1)[pos[:, k]] for k in range(3)], axis=1)

    @property
    def lower(self) -> Array:
        """Lower element corners, shape (n_e, 3)"""
        pos = self.positions
        return np.stack([self.breakpoints[k][pos[:, k]] for k in range(3)], axis=1)

    @property
    def max_aspect_ratio(self) -> float:
        h = self.extents
        return float(np.max(h.max(axis=1) / h.min(axis=1)))


def graded_widths(count: int, length: float, alpha: float) -> Array:
    """Widths w_j = alpha**j * w_0 of `count` intervals summing to `length`"""
    widths = alpha ** np.arange(count, dtype=np.float64)
    return length * widths / widths.sum()


def build_mesh(
    counts: Union[int, Sequence[int]],
    domain: Union[Interval, Sequence[Interval]] = (0.0, 2 * np.pi),
    alpha: float = 1.0,
) -> CartesianMesh:
    """
    Build a Cartesian mesh graded with expansion factor alpha

    The grading is applied identically in all three directions; alpha = 1
    gives a uniform mesh. domain is either one interval (a cube) or one
    interval per direction.
    """

    if isinstance(counts, (int, np.integer)):
        counts = (int(counts),) * 3

    if len(counts) != 3 or min(counts) < 1:
        raise MeshError(f"element counts must be three positive integers, got {counts}")

    if not alpha > 0:
        raise MeshError(f"expansion factor must be positive, got {alpha}")

    intervals: List[Interval]
    if len(domain) == 2 and np.isscalar(domain[0]):
        intervals = [(float(domain[0]), float(domain[1]))] * 3  # type: ignore
    else:
        intervals = [(float(lo), float(hi)) for lo, hi in domain]  # type: ignore

    if len(intervals) != 3:
        raise MeshError(f"expected one interval per direction, got {domain}")

    breakpoints = []
    for count, (lo, hi) in zip(counts, intervals):
        if not hi - lo > 0:
            raise MeshError(f"degenerate domain interval ({lo}, {hi})")

        points = lo + np.concatenate(([0.0], np.cumsum(graded_widths(count, hi - lo, alpha))))
        points[-1] = hi
        breakpoints.append(points)

    mesh = CartesianMesh(
        counts=(int(counts[0]), int(counts[1]), int(counts[2])),
        breakpoints=(breakpoints[0], breakpoints[1], breakpoints[2]),
        domain=(intervals[0], intervals[1], intervals[2]),
        alpha=float(alpha),
    )

    logger.debug(
        "mesh %s, alpha=%g, max aspect ratio %g", mesh.counts, alpha, mesh.max_aspect_ratio
    )

    return mesh


def metric_coefficients(h: Array, lam: float) -> MetricCoefficients:
    """
    d = (h1*h2*h3/8) * (lam, 4/h1^2, 4/h2^2, 4/h3^2)

    h has shape (3,) or (n_e, 3), the result (4,) or (n_e, 4).
    """

    if lam < 0:
        raise MeshError(f"negative Helmholtz parameter {lam} is not supported")

    h = np.asarray(h, dtype=np.float64)

    if h.shape[-1] != 3 or np.any(h <= 0):
        raise MeshError(f"element extents must be positive triples, got shape {h.shape}")

    jacobian = np.prod(h, axis=-1) / 8.0

    return np.stack(
        [
            jacobian * lam,
            jacobian * 4.0 / h[..., 0] ** 2,
            jacobian * 4.0 / h[..., 1] ** 2,
            jacobian * 4.0 / h[..., 2] ** 2,
        ],
        axis=-1,
    )


def distinct_geometries(d: MetricCoefficients) -> Tuple[Array, IntArray]:
    """
    Return the distinct rows of d and, per element, the index of its row
    """

    unique, inverse = np.unique(np.atleast_2d(d), axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)

    logger.debug("%d distinct geometries among %d elements", len(unique), len(inverse))

    return unique, inverse


def face_index(axis: int, side: int) -> Tuple[object, ...]:
    """Index of the open face with normal `axis` at `side` (0 or -1) in a Field3"""

    if axis == 1:
        return (Ellipsis, slice(1, -1), slice(1, -1), side)
    if axis == 2:
        return (Ellipsis, slice(1, -1), side, slice(1, -1))
    if axis == 3:
        return (Ellipsis, side, slice(1, -1), slice(1, -1))

    raise MeshError(f"axis must be 1, 2 or 3, got {axis}")


@dataclass(frozen=True)
class DofClasses:
    """
    Local node classes of a (p+1)^3 element in flat ordering
    i1 + n*i2 + n^2*i3

    faces exclude edge and vertex nodes. boundary lists all non-interior
    nodes in ascending flat order, which is the local ordering of the
    condensed system.
    """

    p: int
    interior: IntArray
    faces: Dict[str, IntArray]
    edges: Dict[str, IntArray]
    vertices: Dict[str, IntArray]
    boundary: IntArray

    @property
    def n(self) -> int:
        return self.p + 1

    @property
    def n_boundary(self) -> int:
        return len(self.boundary)

    @property
    def face_nodes(self) -> IntArray:
        """All face nodes, faces in compass order w, e, s, n, b, t"""
        return np.concatenate([self.faces[name] for name, _, _ in FACES])


def classify_dofs(p: int) -> DofClasses:
    """Split the local nodes of degree p into interior, faces, edges and vertices"""

    if p < 2:
        raise MeshError(f"no interior nodes for p={p}")

    n = p + 1
    idx = np.arange(n**3).reshape(n, n, n)
    inner = slice(1, -1)

    faces = {name: idx[face_index(axis, side)].ravel() for name, axis, side in FACES}

    edges: Dict[str, IntArray] = {}
    vertices: Dict[str, IntArray] = {}

    for s3 in (0, 1):
        for s2 in (0, 1):
            c1, c2, c3 = _COMPASS[1], _COMPASS[2][s2], _COMPASS[3][s3]
            edges[c2 + c3] = idx[-s3, -s2, inner].copy()
            for s1 in (0, 1):
                vertices[c1[s1] + c2 + c3] = idx[-s3, -s2, -s1].reshape(1)

    for s3 in (0, 1):
        for s1 in (0, 1):
            edges[_COMPASS[1][s1] + _COMPASS[3][s3]] = idx[-s3, inner, -s1].copy()

    for s2 in (0, 1):
        for s1 in (0, 1):
            edges[_COMPASS[1][s1] + _COMPASS[2][s2]] = idx[inner, -s2, -s1].copy()

    interior = idx[inner, inner, inner].ravel()
    mask = np.ones(n**3, dtype=bool)
    mask[interior] = False

    return DofClasses(
        p=p,
        interior=interior,
        faces=faces,
        edges=edges,
        vertices=vertices,
        boundary=np.flatnonzero(mask),
    )


@dataclass(frozen=True)
class DofMap:
    """
    Global numbering of a mesh for the full and the condensed system

    full_table[e, j] is the global id of local node j (flat ordering) of
    element e. condensed_table[e, b] = full_table[e, classes.boundary[b]]
    and always lies below n_condensed.
    """

    p: int
    classes: DofClasses
    n_global: int
    n_condensed: int
    full_table: IntArray
    condensed_table: IntArray
    dirichlet: BoolArray
    multiplicity: Array
    entity: IntArray
    kind: IntArray

    @property
    def n_elements(self) -> int:
        return int(self.full_table.shape[0])

    @property
    def free(self) -> BoolArray:
        """Non-Dirichlet nodes of the condensed system"""
        return ~self.dirichlet[: self.n_condensed]

    def table(self, condensed: bool) -> IntArray:
        return self.condensed_table if condensed else self.full_table

    def size(self, condensed: bool) -> int:
        return self.n_condensed if condensed else self.n_global


DirichletFlags = Union[bool, Sequence[bool]]


def _dirichlet_sides(dirichlet: DirichletFlags) -> List[bool]:
    if isinstance(dirichlet, (bool, np.bool_)):
        return [bool(dirichlet)] * 6

    sides = [bool(flag) for flag in dirichlet]
    if len(sides) != 6:
        raise MeshError(f"expected six Dirichlet side flags (w, e, s, n, b, t), got {sides}")

    return sides


def build_dof_maps(mesh: CartesianMesh, p: int, dirichlet: DirichletFlags = True) -> DofMap:
    """
    Number the nodes of mesh for degree p

    dirichlet flags the domain sides in compass order (w, e, s, n, b, t),
    or all of them at once. Dirichlet nodes stay in the numbering.
    """

    classes = classify_dofs(p)
    n = p + 1
    sizes = [ne * p + 1 for ne in mesh.counts]

    # Lattice coordinates of every global node, flat index g1 + N1*(g2 + N2*g3)
    g3, g2, g1 = (
        axis.ravel()
        for axis in np.meshgrid(*(np.arange(s) for s in sizes[::-1]), indexing="ij")
    )
    on_plane = [g % p == 0 for g in (g1, g2, g3)]
    kind = sum(plane.astype(np.int64) for plane in on_plane)

    order = np.lexsort((g1, g2, g3, -kind))
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))

    # Local nodes to lattice nodes, per element
    i3, i2, i1 = (axis.ravel() for axis in np.meshgrid(*(np.arange(n),) * 3, indexing="ij"))
    pos = mesh.positions
    l1 = pos[:, 0, None] * p + i1[None, :]
    l2 = pos[:, 1, None] * p + i2[None, :]
    l3 = pos[:, 2, None] * p + i3[None, :]
    full_table = rank[l1 + sizes[0] * (l2 + sizes[1] * l3)]

    n_global = len(order)
    n_condensed = int(np.count_nonzero(kind > INTERIOR))

    # Per global id: entity kind, Dirichlet flag and entity key
    kind_g = np.empty_like(kind)
    kind_g[rank] = kind

    sides = _dirichlet_sides(dirichlet)
    on_boundary = np.zeros(n_global, dtype=bool)
    for k, g in enumerate((g1, g2, g3)):
        low, high = sides[2 * k], sides[2 * k + 1]
        if low:
            on_boundary[rank[g == 0]] = True
        if high:
            on_boundary[rank[g == sizes[k] - 1]] = True

    keys = np.stack([2 * (g // p) + (g % p != 0) for g in (g1, g2, g3)], axis=1)
    keys_g = np.empty_like(keys)
    keys_g[rank] = keys
    _, entity = np.unique(keys_g, axis=0, return_inverse=True)

    multiplicity = np.bincount(full_table.ravel(), minlength=n_global).astype(np.float64)

    dofs = DofMap(
        p=p,
        classes=classes,
        n_global=n_global,
        n_condensed=n_condensed,
        full_table=full_table,
        condensed_table=full_table[:, classes.boundary],
        dirichlet=on_boundary,
        multiplicity=multiplicity,
        entity=entity.reshape(-1),
        kind=kind_g,
    )

    logger.debug(
        "numbered p=%d: %d global nodes, %d condensed, %d Dirichlet",
        p,
        n_global,
        n_condensed,
        int(on_boundary.sum()),
    )

    return dofs


def _local_values(dofs: DofMap, local: Array, condensed: bool) -> Array:
    n_e = dofs.n_elements
    flat = local.reshape(n_e, -1)

    if condensed and flat.shape[1] != dofs.classes.n_boundary:
        flat = flat[:, dofs.classes.boundary]

    if flat.shape != dofs.table(condensed).shape:
        raise MeshError(
            f"element values of shape {local.shape} do not match the map "
            f"{dofs.table(condensed).shape}"
        )

    return flat


def gather(dofs: DofMap, local: Array, condensed: bool = False) -> Array:
    """
    Sum element values into a global vector (R)

    local holds full element fields (n_e, n, n, n). For the condensed system
    only the boundary entries are read.
    """

    values = _local_values(dofs, local, condensed)
    table = dofs.table(condensed)

    return np.bincount(
        table.ravel(), weights=values.ravel(), minlength=dofs.size(condensed)
    ).astype(np.float64)


def scatter(dofs: DofMap, x: Array, condensed: bool = False) -> Array:
    """
    Copy global values to element fields (R^T), shape (n_e, n, n, n)

    For the condensed system interior entries are zero.
    """

    size = dofs.size(condensed)

    if x.shape != (size,):
        raise MeshError(f"global vector of shape {x.shape} does not match size {size}")

    n = dofs.p + 1
    n_e = dofs.n_elements

    if not condensed:
        return x[dofs.full_table].reshape(n_e, n, n, n)

    out = np.zeros((n_e, n**3))
    out[:, dofs.classes.boundary] = x[dofs.condensed_table]

    return out.reshape(n_e, n, n, n)


def average(dofs: DofMap, local: Array, condensed: bool = False) -> Array:
    """Global vector of continuous element values, gather / multiplicity"""

    size = dofs.size(condensed)
    return gather(dofs, local, condensed) / dofs.multiplicity[:size]


def element_nodes(mesh: CartesianMesh, basis: Basis1D) -> Array:
    """Physical coordinates of all element nodes, shape (n_e, n, n, n, 3)"""

    ref = 0.5 * (basis.nodes + 1.0)
    lower = mesh.lower
    h = mesh.extents

    x1 = lower[:, 0, None] + h[:, 0, None] * ref[None, :]
    x2 = lower[:, 1, None] + h[:, 1, None] * ref[None, :]
    x3 = lower[:, 2, None] + h[:, 2, None] * ref[None, :]

    n_e, n = x1.shape
    shape = (n_e, n, n, n)

    return np.stack(
        [
            np.broadcast_to(x1[:, None, None, :], shape),
            np.broadcast_to(x2[:, None, :, None], shape),
            np.broadcast_to(x3[:, :, None, None], shape),
        ],
        axis=-1,
    )


def dirichlet_values(dofs: DofMap, values: Array) -> Array:
    """Condensed global vector holding `values` on Dirichlet nodes and 0 elsewhere"""

    x = average(dofs, values, condensed=True)
    x[dofs.free] = 0.0

    return x


def entity_nodes(dofs: DofMap, kind: Optional[int] = None) -> List[IntArray]:
    """Global ids grouped by entity, optionally only entities of one kind"""

    order = np.argsort(dofs.entity, kind="stable")
    bounds = np.flatnonzero(np.diff(dofs.entity[order])) + 1
    groups = np.split(order, bounds)

    if kind is None:
        return groups

    return [group for group in groups if dofs.kind[group[0]] == kind]
