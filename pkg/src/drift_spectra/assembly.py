"""Stiffness/mass pencil assembly.

Three problems share the OperatorPencil container:

* 1-d drift Laplacian on an interval, weighted measure f dx = exp(-phi) dx,
  Neumann or Dirichlet (linear elements, 3-point Gauss per element);
* 1-d Dirichlet Laplacian (weight optional);
* 2-d thin-domain Neumann Laplacian in mapped coordinates (bilinear
  elements on the reference rectangle, 2x2 Gauss per cell).

With u(x, y) = u^(x, t), y = epsilon*f(x)*t, the thin weak form is exact:

    u_x = u^_x - t*(f'/f)*u^_t,   u_y = u^_t/(epsilon*f),
    dx dy = epsilon*f dx dt,

so no boundary is approximated and the formulation stays non-degenerate
as epsilon -> 0 or where f vanishes at an endpoint (quadrature points are
strictly interior).  Assembly is deterministic: fixed element traversal
order, so repeated runs are bit-identical.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError
from .mesh import (GAUSS2_PTS, GAUSS2_WTS, GAUSS3_PTS, GAUSS3_WTS,
                   IntervalMesh, MappedGrid)
from .weights import WeightSpec


@dataclass(frozen=True)
class OperatorPencil:
    """Symmetric pencil (K, M) of the generalized problem K v = mu M v.

    Invariants checked on construction: K and M are bit-exact symmetric,
    M has a positive diagonal, K a non-negative one, and for Neumann
    problems the constant vector lies in the kernel of K up to
    1e-12 * max|K|.
    """

    K: sp.csr_matrix = field(repr=False)
    M: sp.csr_matrix = field(repr=False)
    dof_to_node: np.ndarray = field(repr=False)
    coords: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)

    @property
    def dof_count(self) -> int:
        return self.K.shape[0]

    def __post_init__(self):
        K, M = self.K, self.M
        if K.shape != M.shape or K.shape[0] != K.shape[1]:
            raise AssemblyError("pencil matrices must be square and congruent")
        if abs(K - K.T).max() != 0.0 or abs(M - M.T).max() != 0.0:
            raise AssemblyError("pencil matrices must be bit-exact symmetric")
        if np.any(M.diagonal() <= 0):
            raise AssemblyError("mass matrix has a non-positive diagonal entry")
        kd = K.diagonal()
        if np.any(kd < -1e-12 * max(abs(K).max(), 1e-300)):
            raise AssemblyError("stiffness matrix has a negative diagonal entry")
        if self.meta.get("bc") == "neumann":
            kernel = np.abs(K @ np.ones(K.shape[0])).max()
            if kernel > 1e-12 * abs(K).max():
                raise AssemblyError(
                    f"constants are not in the Neumann kernel: |K 1| = {kernel:.3e}")


def _symmetrized(rows, cols, vals, n) -> sp.csr_matrix:
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    return (A + A.T) * 0.5


def _weight_at(w: WeightSpec, x: np.ndarray, need_deriv: bool = False):
    f = np.asarray(w.f_value(x), dtype=float)
    if f.shape != x.shape:
        f = np.broadcast_to(f, x.shape).copy()
    if np.any(f <= 0):
        bad = x[np.unravel_index(np.argmax(f <= 0), f.shape)]
        raise AssemblyError(f"non-positive weight at quadrature point x = {bad!r}")
    if not need_deriv:
        return f, None
    df = np.asarray(w.f_deriv(x), dtype=float)
    if df.shape != x.shape:
        df = np.broadcast_to(df, x.shape).copy()
    return f, df


def assemble_drift_1d(mesh: IntervalMesh, weight: WeightSpec | None,
                      bc: str = "neumann") -> OperatorPencil:
    """Pencil of the weighted Rayleigh quotient on the interval:
    K_ij = int phi_i' phi_j' f dx, M_ij = int phi_i phi_j f dx.

    ``bc`` is "neumann" (natural, no constraints) or "dirichlet"
    (endpoint rows/columns eliminated).
    """
    if bc not in ("neumann", "dirichlet"):
        raise ValueError(f"unknown boundary condition {bc!r}")
    if weight is None:
        weight = WeightSpec.euclidean()
    nodes = mesh.nodes
    n = mesh.num_elements
    h = np.diff(nodes)

    xg = nodes[:-1, None] + GAUSS3_PTS[None, :] * h[:, None]   # (n, 3)
    wg = GAUSS3_WTS[None, :] * h[:, None]
    f, _ = _weight_at(weight, xg)

    int_f = np.sum(wg * f, axis=1)                 # int_e f
    shp = np.stack([1.0 - GAUSS3_PTS, GAUSS3_PTS])  # (2, 3) values of N0, N1
    # element mass: m_ab = int N_a N_b f
    m_loc = np.einsum("aq,bq,eq->eab", shp, shp, wg * f)
    # element stiffness: +-int_f / h^2
    ke = int_f / h**2
    k_loc = ke[:, None, None] * np.array([[1.0, -1.0], [-1.0, 1.0]])

    conn = np.stack([np.arange(n), np.arange(n) + 1], axis=1)  # (n, 2)
    rows = np.repeat(conn, 2, axis=1).ravel()
    cols = np.tile(conn, (1, 2)).ravel()
    K = _symmetrized(rows, cols, k_loc.ravel(), n + 1)
    M = _symmetrized(rows, cols, m_loc.ravel(), n + 1)

    if bc == "dirichlet":
        keep = np.arange(1, n)
        K = K[keep][:, keep].tocsr()
        M = M[keep][:, keep].tocsr()
        dof_to_node = keep
    else:
        dof_to_node = np.arange(n + 1)

    meta = {"problem": "drift-1d", "bc": bc, "weight": weight.describe(),
            "n": n, "domain": (mesh.domain.a, mesh.domain.b)}
    return OperatorPencil(K=K.tocsr(), M=M.tocsr(), dof_to_node=dof_to_node,
                          coords=nodes[dof_to_node], meta=meta)


def assemble_dirichlet_1d(mesh: IntervalMesh,
                          weight: WeightSpec | None = None) -> OperatorPencil:
    """Dirichlet pencil; the default weight (phi = 0) gives the Euclidean
    interval spectrum lambda_k = (k pi / d)^2."""
    return assemble_drift_1d(mesh, weight, bc="dirichlet")


def assemble_thin_2d(grid: MappedGrid) -> OperatorPencil:
    """Neumann pencil of the thin domain in mapped coordinates.

    Bilinear elements on the reference rectangle with the exact weak form;
    Neumann throughout is natural, so there are no constraints and the
    constant vector spans the kernel of K.
    """
    spec = grid.spec
    weight = spec.weight
    eps = spec.epsilon
    nx, nt = grid.nx, grid.nt
    hx = np.diff(grid.x_nodes)
    ht = np.diff(grid.t_nodes)

    ei, ej = np.meshgrid(np.arange(nx), np.arange(nt), indexing="ij")
    ei = ei.ravel()
    ej = ej.ravel()
    ncell = nx * nt
    nt1 = nt + 1
    # local node order: (0,0), (1,0), (0,1), (1,1) in (x, t) offsets
    offsets = np.array([[0, 0], [1, 0], [0, 1], [1, 1]])
    conn = np.stack([(ei + di) * nt1 + (ej + dj) for di, dj in offsets], axis=1)

    k_loc = np.zeros((ncell, 4, 4))
    m_loc = np.zeros((ncell, 4, 4))
    hxe = hx[ei]
    hte = ht[ej]
    for gu, wu in zip(GAUSS2_PTS, GAUSS2_WTS):
        xg = grid.x_nodes[ei] + gu * hxe
        f, df = _weight_at(weight, xg, need_deriv=True)
        ratio = df / f
        for gv, wv in zip(GAUSS2_PTS, GAUSS2_WTS):
            tg = grid.t_nodes[ej] + gv * hte
            w = wu * wv * hxe * hte
            shape = np.array([(1 - gu) * (1 - gv), gu * (1 - gv),
                              (1 - gu) * gv, gu * gv])
            dndx = np.array([-(1 - gv), (1 - gv), -gv, gv])[None, :] / hxe[:, None]
            dndt = np.array([-(1 - gu), -gu, (1 - gu), gu])[None, :] / hte[:, None]
            # mapped gradients
            a = dndx - (tg * ratio)[:, None] * dndt      # d/dx part
            b = dndt / (eps * f)[:, None]                # d/dy part
            jac = eps * f * w
            k_loc += jac[:, None, None] * (a[:, :, None] * a[:, None, :]
                                           + b[:, :, None] * b[:, None, :])
            m_loc += jac[:, None, None] * (shape[None, :, None] * shape[None, None, :])

    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    ndof = (nx + 1) * nt1
    K = _symmetrized(rows, cols, k_loc.ravel(), ndof)
    M = _symmetrized(rows, cols, m_loc.ravel(), ndof)

    meta = {"problem": "thin-2d", "bc": "neumann", "weight": weight.describe(),
            "epsilon": eps, "nx": nx, "nt": nt,
            "domain": (spec.base.a, spec.base.b)}
    return OperatorPencil(K=K, M=M, dof_to_node=np.arange(ndof),
                          coords=grid.node_x(), meta=meta)
