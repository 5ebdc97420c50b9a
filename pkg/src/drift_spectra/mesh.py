"""1-d interval meshes and the mapped tensor grid for thin domains.

The thin domain sits under the graph y = epsilon*f(x) over a base interval.
Instead of meshing the physical region (which degenerates as epsilon -> 0,
or where f vanishes at an endpoint), we mesh the reference rectangle
[a,b] x [0,1] and carry the map (x, t) -> (x, epsilon*f(x)*t) into the
weak form.  Grids are immutable after construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MeshError, AssemblyError
from .weights import WeightSpec

# 3-point Gauss-Legendre on [0,1]: exact for quintics
GAUSS3_PTS = np.array([0.5 - np.sqrt(15.0) / 10.0, 0.5, 0.5 + np.sqrt(15.0) / 10.0])
GAUSS3_WTS = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])

# 2-point Gauss-Legendre on [0,1]: exact for cubics
GAUSS2_PTS = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
GAUSS2_WTS = np.array([0.5, 0.5])

TAG_BOTTOM = "B_I"    # t = 0
TAG_TOP = "B_II"      # t = 1, physical y = epsilon*f(x)
TAG_LATERAL = "B_III"  # x = a or x = b


@dataclass(frozen=True)
class IntervalDomain:
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise MeshError(f"interval needs a < b, got [{self.a}, {self.b}]")

    @property
    def diameter(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class IntervalMesh:
    domain: IntervalDomain
    nodes: np.ndarray = field(repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if not np.all(np.diff(nodes) > 0):
            raise MeshError("mesh nodes must be strictly increasing")
        if nodes[0] != self.domain.a or nodes[-1] != self.domain.b:
            raise MeshError("mesh nodes must span the domain exactly")
        object.__setattr__(self, "nodes", nodes)

    @property
    def num_elements(self) -> int:
        return len(self.nodes) - 1

    def gauss_points(self):
        """(points, weights) of the per-element 3-point rule, flattened to
        shape (num_elements, 3)."""
        h = np.diff(self.nodes)
        pts = self.nodes[:-1, None] + GAUSS3_PTS[None, :] * h[:, None]
        wts = GAUSS3_WTS[None, :] * h[:, None]
        return pts, wts


def build_interval_mesh(domain: IntervalDomain, n: int) -> IntervalMesh:
    """Uniform mesh with n elements (spacing (b-a)/n)."""
    if n < 1:
        raise MeshError(f"need at least one element, got n = {n}")
    return IntervalMesh(domain, np.linspace(domain.a, domain.b, n + 1))


@dataclass(frozen=True)
class ThinDomainSpec:
    base: IntervalDomain
    weight: WeightSpec
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise MeshError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class MappedGrid:
    """Tensor reference grid for the thin domain.

    Node (i, j) sits at reference (x_i, t_j) and physical
    (x_i, epsilon*f(x_i)*t_j); the flat index is i*(nt+1) + j (x-major).
    ``boundary_tags`` maps each tag to a sorted array of flat node indices;
    corner nodes resolve to the lateral tag, so the tag sets partition the
    boundary.
    """

    spec: ThinDomainSpec
    nx: int
    nt: int
    x_nodes: np.ndarray = field(repr=False)
    t_nodes: np.ndarray = field(repr=False)
    boundary_tags: dict = field(repr=False)

    @property
    def num_nodes(self) -> int:
        return (self.nx + 1) * (self.nt + 1)

    def node_index(self, i: int, j: int) -> int:
        return i * (self.nt + 1) + j

    def node_x(self) -> np.ndarray:
        """x coordinate of every node in flat order."""
        return np.repeat(self.x_nodes, self.nt + 1)

    def physical_y(self) -> np.ndarray:
        """Physical y coordinate of every node in flat order."""
        f = self.spec.weight.f_value(self.x_nodes)
        return (self.spec.epsilon * np.asarray(f)[:, None] * self.t_nodes[None, :]).ravel()

    def cell_areas(self) -> np.ndarray:
        """Physical area of each cell: the Jacobian epsilon*f integrated
        with the assembly's 2x2 Gauss rule (exact for cubic f)."""
        hx = np.diff(self.x_nodes)
        ht = np.diff(self.t_nodes)
        areas = np.zeros((self.nx, self.nt))
        for gp, gw in zip(GAUSS2_PTS, GAUSS2_WTS):
            xg = self.x_nodes[:-1] + gp * hx
            f = np.asarray(self.spec.weight.f_value(xg))
            areas += gw * (self.spec.epsilon * f * hx)[:, None] * ht[None, :]
        return areas


def build_mapped_grid(spec: ThinDomainSpec, nx: int, nt: int) -> MappedGrid:
    """Uniform (nx+1) x (nt+1) reference grid with boundary tags.

    Requires f > 0 at the 2x2 Gauss abscissae of every base element (the
    nodes themselves may sit where f vanishes; quadrature points are
    strictly interior, so assembled matrices stay finite and positive).
    """
    if nx < 2 or nt < 2:
        raise MeshError(f"grid needs nx >= 2 and nt >= 2, got nx={nx}, nt={nt}")
    x_nodes = np.linspace(spec.base.a, spec.base.b, nx + 1)
    t_nodes = np.linspace(0.0, 1.0, nt + 1)
    hx = (spec.base.b - spec.base.a) / nx
    for gp in GAUSS2_PTS:
        xg = x_nodes[:-1] + gp * hx
        f = np.asarray(spec.weight.f_value(xg))
        if np.any(f <= 0):
            bad = xg[np.argmax(f <= 0)]
            raise AssemblyError(f"height function is non-positive at x = {bad!r}")

    nt1 = nt + 1
    lateral = np.concatenate([np.arange(nt1), nx * nt1 + np.arange(nt1)])
    interior_i = np.arange(1, nx)
    bottom = interior_i * nt1
    top = interior_i * nt1 + nt
    tags = {
        TAG_BOTTOM: np.sort(bottom),
        TAG_TOP: np.sort(top),
        TAG_LATERAL: np.sort(lateral),
    }
    return MappedGrid(spec=spec, nx=nx, nt=nt, x_nodes=x_nodes,
                      t_nodes=t_nodes, boundary_tags=tags)
