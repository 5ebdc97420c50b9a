"""Weight specifications: the exponent phi and the density f = exp(-phi).

Three construction modes:

* ``phi-given``   - phi is symbolic, f is the derived tree exp(-phi);
* ``f-given``     - f is symbolic, phi is the derived tree -log(f);
* ``f-tabulated`` - f is a piecewise-linear interpolant of nodal samples,
  optionally raised to an integer power (used when the density is a
  computed eigenfunction rather than a formula).

Downstream code only consumes ``f_value``, ``f_deriv`` and ``dlogf``; the
density must be checked positive wherever those are called (assembly does
this at its quadrature points).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import expr as ex
from .errors import AssemblyError


@dataclass(frozen=True)
class WeightSpec:
    mode: str  # "phi-given" | "f-given" | "f-tabulated"
    phi: ex.Expr | None = None
    f: ex.Expr | None = None
    table_nodes: np.ndarray | None = field(default=None, repr=False)
    table_values: np.ndarray | None = field(default=None, repr=False)
    table_power: int = 1

    # -- constructors -------------------------------------------------

    @staticmethod
    def from_phi(phi: ex.Expr | str) -> "WeightSpec":
        if isinstance(phi, str):
            phi = ex.parse_expr(phi)
        f = ex.func("exp", ex.neg(phi))
        return WeightSpec(mode="phi-given", phi=phi, f=f)

    @staticmethod
    def from_f(f: ex.Expr | str) -> "WeightSpec":
        if isinstance(f, str):
            f = ex.parse_expr(f)
        phi = ex.neg(ex.func("log", f))
        return WeightSpec(mode="f-given", phi=phi, f=f)

    @staticmethod
    def from_samples(nodes: np.ndarray, values: np.ndarray, power: int = 1) -> "WeightSpec":
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if nodes.ndim != 1 or nodes.shape != values.shape or len(nodes) < 2:
            raise ValueError("tabulated weight needs matching 1-d node/value arrays")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("tabulated weight nodes must be strictly increasing")
        return WeightSpec(mode="f-tabulated", table_nodes=nodes,
                          table_values=values, table_power=power)

    @staticmethod
    def euclidean() -> "WeightSpec":
        """phi identically zero: the unweighted (Euclidean) case."""
        return WeightSpec.from_phi(ex.num(0.0))

    # -- evaluation ----------------------------------------------------

    @cached_property
    def _df(self) -> ex.Expr | None:
        return ex.diff_expr(self.f) if self.f is not None else None

    @cached_property
    def _table_slopes(self) -> np.ndarray | None:
        if self.table_nodes is None:
            return None
        return np.diff(self.table_values) / np.diff(self.table_nodes)

    def _interp(self, x):
        return np.interp(x, self.table_nodes, self.table_values)

    def _segment_slope(self, x):
        idx = np.clip(np.searchsorted(self.table_nodes, x, side="right") - 1,
                      0, len(self.table_nodes) - 2)
        return self._table_slopes[idx]

    def f_value(self, x):
        """Density f at x (scalar or ndarray)."""
        if self.mode == "f-tabulated":
            return self._interp(x) ** self.table_power
        return ex.eval_expr(self.f, x)

    def f_deriv(self, x):
        """df/dx at x.  Tabulated mode differentiates the interpolant, so
        the derivative is only meaningful strictly inside a segment
        (quadrature points always are)."""
        if self.mode == "f-tabulated":
            p = self.table_power
            base = self._interp(x)
            return p * base ** (p - 1) * self._segment_slope(x)
        return ex.eval_expr(self._df, x)

    def dlogf(self, x):
        """(log f)' = f'/f = -phi' at x; requires f(x) > 0."""
        fv = self.f_value(x)
        if np.any(np.asarray(fv) <= 0):
            raise AssemblyError(f"weight density is non-positive at x = {x!r}")
        return self.f_deriv(x) / fv

    def scaled(self, c: float) -> "WeightSpec":
        """The weight with density c*f (c > 0); leaves every generalized
        eigenvalue unchanged."""
        if c <= 0:
            raise ValueError("scale factor must be positive")
        if self.mode == "f-tabulated":
            return WeightSpec(mode=self.mode, table_nodes=self.table_nodes,
                              table_values=self.table_values * c ** (1.0 / self.table_power),
                              table_power=self.table_power)
        return WeightSpec.from_f(ex.mul(ex.num(c), self.f))

    def squared(self) -> "WeightSpec":
        """The weight with density f^2: the measure the gap check solves
        against, where the input density plays the role of a ground state."""
        if self.mode == "f-tabulated":
            return WeightSpec(mode=self.mode, table_nodes=self.table_nodes,
                              table_values=self.table_values,
                              table_power=2 * self.table_power)
        return WeightSpec.from_f(ex.powc(self.f, 2.0))

    def describe(self) -> str:
        if self.mode == "phi-given":
            return f"phi = {ex.pretty(self.phi)}"
        if self.mode == "f-given":
            return f"f = {ex.pretty(self.f)}"
        return f"f = tabulated({len(self.table_nodes)} nodes)^{self.table_power}"
