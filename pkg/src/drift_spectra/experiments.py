"""Experiment harnesses: spectra, collapse-order studies, gap and
eigenfunction-structure checks.

Conventions shared by every harness:

* Neumann spectra are indexed from 0 (the constant mode mu_0 = 0),
  Dirichlet spectra from 1.
* Reference eigenvalues for epsilon-studies come from 1-d solves with
  Richardson extrapolation, never from the 2-d solver, so the reference
  error is independent of the quantity under test.
* Eigenvalue matching across epsilon uses sorted order; clusters with
  gaps below 1e-8 of the spectral scale are compared as sorted values.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import expr as ex
from .assembly import assemble_drift_1d, assemble_thin_2d, OperatorPencil
from .eigensolve import SolveOptions, SpectrumResult, solve_smallest
from .errors import AssemblyError, MeshError, ReferenceNotConverged, SolverError
from .mesh import IntervalDomain, ThinDomainSpec, build_interval_mesh, build_mapped_grid
from .weights import WeightSpec

MODEL_CONSISTENT = "model-consistent"
PAPER_LITERAL = "paper-literal"


def _solved(pencil: OperatorPencil, k: int, opts: SolveOptions) -> SpectrumResult:
    result = solve_smallest(pencil, k, opts)
    if not result.converged:
        raise SolverError(
            f"eigensolver did not converge ({result.solver}, "
            f"{result.iterations} iterations, max residual "
            f"{float(np.max(result.residuals)):.3e})")
    return result


def drift_spectrum(domain: IntervalDomain, weight: WeightSpec | None, bc: str,
                   n: int, k: int, opts: SolveOptions | None = None) -> SpectrumResult:
    """Smallest k eigenpairs of the 1-d weighted problem on a uniform
    n-element mesh.  Neumann eigenvalues start at mu_0 = 0; Dirichlet
    eigenvalues start at lambda_1."""
    opts = opts or SolveOptions()
    mesh = build_interval_mesh(domain, n)
    pencil = assemble_drift_1d(mesh, weight, bc=bc)
    return _solved(pencil, k, opts)


def thin_spectrum(spec: ThinDomainSpec, nx: int, nt: int, k: int,
                  opts: SolveOptions | None = None) -> SpectrumResult:
    """Smallest k Neumann eigenpairs of the thin domain under y = eps*f(x)."""
    opts = opts or SolveOptions()
    grid = build_mapped_grid(spec, nx, nt)
    pencil = assemble_thin_2d(grid)
    return _solved(pencil, k, opts)


# ---------------------------------------------------------------------------
# collapse studies


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-(epsilon, k) thin eigenvalues against a 1-d reference, with
    fitted log-log orders where the errors sit above the numerical floor."""

    epsilons: list
    ks: list
    mu_eps: np.ndarray = field(repr=False)      # shape (len(epsilons), len(ks))
    references: np.ndarray = field(repr=False)  # per k
    abs_errors: np.ndarray = field(repr=False)
    fitted_orders: dict = field(repr=False)     # k -> float | None
    at_floor: dict = field(repr=False)          # k -> bool
    floors: np.ndarray = field(repr=False)      # per k
    reference_changes: np.ndarray = field(repr=False)
    reference_note: str = ""

    def csv_rows(self):
        header = ["epsilon", "k", "mu_eps", "mu_ref", "abs_err"]
        rows = []
        for i, eps in enumerate(self.epsilons):
            for j, k in enumerate(self.ks):
                rows.append([eps, k, self.mu_eps[i, j], self.references[j],
                             self.abs_errors[i, j]])
        return header, rows

    def to_dict(self):
        return {
            "epsilons": list(self.epsilons),
            "ks": list(self.ks),
            "reference_note": self.reference_note,
            "references": list(self.references),
            "reference_changes": list(self.reference_changes),
            "floors": list(self.floors),
            "fitted_orders": {str(k): self.fitted_orders[k] for k in self.ks},
            "at_floor": {str(k): self.at_floor[k] for k in self.ks},
        }


def _check_eps_list(eps_list, minimum=1):
    eps = [float(e) for e in eps_list]
    if len(eps) < minimum:
        raise ValueError(f"need at least {minimum} epsilon values")
    if any(e <= 0 for e in eps):
        raise ValueError("epsilon values must be positive")
    if len(eps) > 1:
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilon list must be strictly descending")
        ratios = [b / a for a, b in zip(eps, eps[1:])]
        if any(abs(r - ratios[0]) > 1e-6 * ratios[0] for r in ratios):
            raise ValueError("epsilon list must be geometric")
    return eps


def _order_fit(eps, errors):
    slope = np.polyfit(np.log(eps), np.log(errors), 1)[0]
    return float(slope)


def _study(domain, weight, eps_list, nx, nt, ks, references, ref_changes,
           nx_floor, opts, note) -> ConvergenceReport:
    """Shared engine for the order study and the corollary harness."""
    eps_list = list(eps_list)
    k_solve = max(ks) + 1
    mu = np.zeros((len(eps_list), len(ks)))
    for i, eps in enumerate(eps_list):
        spec = ThinDomainSpec(domain, weight, eps)
        result = thin_spectrum(spec, nx, nt, k_solve, opts)
        mu[i] = result.eigenvalues[list(ks)]
    errors = np.abs(mu - references[None, :])

    floors = np.maximum(2.0 * nx_floor,
                        10.0 * opts.tol * np.maximum(1.0, np.abs(references)))
    orders: dict = {}
    at_floor: dict = {}
    for j, k in enumerate(ks):
        err = errors[:, j]
        if not np.all(err > floors[j]):
            at_floor[k] = True
            orders[k] = None
            continue
        at_floor[k] = False
        if 10.0 * ref_changes[j] >= np.min(err):
            raise ReferenceNotConverged(
                f"reference not converged: mode k={k} has reference "
                f"uncertainty {ref_changes[j]:.3e} against smallest error "
                f"{np.min(err):.3e}")
        orders[k] = _order_fit(eps_list, err) if len(eps_list) >= 3 else None
    return ConvergenceReport(
        epsilons=eps_list, ks=list(ks), mu_eps=mu, references=references,
        abs_errors=errors, fitted_orders=orders, at_floor=at_floor,
        floors=floors, reference_changes=ref_changes, reference_note=note)


def convergence_study(domain: IntervalDomain, weight: WeightSpec,
                      eps_list, nx: int, nt: int, k_max: int, ref_n: int,
                      opts: SolveOptions | None = None) -> ConvergenceReport:
    """Thin-domain eigenvalue errors against the 1-d drift reference and
    the fitted order in epsilon (the collapse limit is quadratic).

    The reference solves run at ref_n and 2*ref_n elements and are
    Richardson-extrapolated; the study errors out when the reference
    uncertainty is not at least 10x below the smallest measured error of
    a fitted mode."""
    opts = opts or SolveOptions()
    eps_list = _check_eps_list(eps_list, minimum=4)
    ks = list(range(k_max + 1))
    k_solve = k_max + 1

    coarse = drift_spectrum(domain, weight, "neumann", ref_n, k_solve, opts).eigenvalues
    fine = drift_spectrum(domain, weight, "neumann", 2 * ref_n, k_solve, opts).eigenvalues
    references = fine + (fine - coarse) / 3.0  # h^2 Richardson
    ref_changes = np.abs(references - fine)
    at_nx = drift_spectrum(domain, weight, "neumann", nx, k_solve, opts).eigenvalues
    nx_floor = np.abs(at_nx - references)

    note = (f"1-d drift reference, Richardson from n={ref_n} and n={2 * ref_n}; "
            f"base-resolution floor from n={nx}")
    return _study(domain, weight, eps_list, nx, nt, ks, references,
                  ref_changes, nx_floor, opts, note)


def corollary1_harness(domain: IntervalDomain, n: int, eps_list,
                       nx: int, nt: int, k_max: int,
                       opts: SolveOptions | None = None) -> ConvergenceReport:
    """Thin domains under the squared Dirichlet ground state: the Neumann
    eigenvalue mu_{k-1}(eps) approaches the Dirichlet gap
    lambda_k - lambda_1 as the domain collapses.

    The ground state is computed on an n-element mesh (unweighted
    Dirichlet problem), sign-normalized positive with unit L2 norm, and
    enters the thin solves as a piecewise-linear height sampled at
    quadrature points and squared."""
    opts = opts or SolveOptions()
    eps_list = _check_eps_list(eps_list, minimum=1)
    ks = list(range(1, k_max + 1))
    k_solve = k_max + 1

    coarse = drift_spectrum(domain, None, "dirichlet", n, k_solve, opts).eigenvalues
    fine_res = drift_spectrum(domain, None, "dirichlet", 2 * n, k_solve, opts)
    fine = fine_res.eigenvalues
    lam = fine + (fine - coarse) / 3.0
    references = np.array([lam[k] - lam[0] for k in ks])
    # gap uncertainty: both endpoints of the difference contribute
    ref_changes = np.abs(lam - fine)[list(ks)] + np.abs(lam - fine)[0]

    ground = fine_res.eigenvectors[:, 0]
    mesh = build_interval_mesh(domain, 2 * n)
    interior = ground
    if np.any(interior <= 0):
        warnings.warn("computed ground state has a non-positive interior "
                      "node; squaring hides the sign but the solve deserves "
                      "a look", RuntimeWarning)
    nodal = np.zeros(len(mesh.nodes))
    nodal[1:-1] = interior
    weight = WeightSpec.from_samples(mesh.nodes, nodal, power=2)

    at_nx = drift_spectrum(domain, weight, "neumann", nx, k_solve, opts).eigenvalues
    nx_floor = np.abs(at_nx[list(ks)] - references)

    note = (f"Dirichlet-gap reference, Richardson from n={n} and n={2 * n}; "
            f"height = squared ground state on {2 * n + 1} nodes; "
            f"base-resolution floor from n={nx}")
    return _study(domain, weight, eps_list, nx, nt, ks, references,
                  ref_changes, nx_floor, opts, note)


# ---------------------------------------------------------------------------
# identity and inequality checks


@dataclass(frozen=True)
class Prop2Report:
    """Dirichlet gaps against the drift Neumann spectrum for the
    squared-ground-state measure (they agree in the continuum)."""

    ks: list
    lambda_gaps: np.ndarray = field(repr=False)
    drift_mus: np.ndarray = field(repr=False)
    rel_mismatches: np.ndarray = field(repr=False)
    tolerance: float = 5e-3
    passed: bool = True

    def csv_rows(self):
        header = ["k", "lambda_gap", "drift_mu", "rel_mismatch"]
        rows = [[k, self.lambda_gaps[i], self.drift_mus[i], self.rel_mismatches[i]]
                for i, k in enumerate(self.ks)]
        return header, rows

    def to_dict(self):
        return {
            "ks": list(self.ks),
            "lambda_gap": float(self.lambda_gaps[1]) if len(self.ks) > 1 else 0.0,
            "drift_mu": float(self.drift_mus[1]) if len(self.ks) > 1 else 0.0,
            "tolerance": self.tolerance,
            "passed": bool(self.passed),
        }


def prop2_check(domain: IntervalDomain, n: int, k_max: int,
                tolerance: float = 5e-3,
                opts: SolveOptions | None = None) -> Prop2Report:
    """Gap identity: lambda_k - lambda_1 equals the (k-1)-th Neumann
    eigenvalue of the drift problem whose measure is the squared Dirichlet
    ground state (analytically sin^2 on an interval)."""
    opts = opts or SolveOptions()
    lam = drift_spectrum(domain, None, "dirichlet", n, k_max, opts).eigenvalues
    a, d = domain.a, domain.diameter
    ground = ex.func("sin", ex.mul(ex.PI, ex.div(ex.sub(ex.X, ex.num(a)), ex.num(d))))
    weight = WeightSpec.from_f(ex.powc(ground, 2.0))
    mu = drift_spectrum(domain, weight, "neumann", n, k_max, opts).eigenvalues

    ks = list(range(1, k_max + 1))
    gaps = np.array([lam[k - 1] - lam[0] for k in ks])
    mus = mu[:k_max]
    mism = np.abs(gaps - mus) / np.maximum(np.abs(gaps), 1.0)
    return Prop2Report(ks=ks, lambda_gaps=gaps, drift_mus=mus,
                       rel_mismatches=mism, tolerance=tolerance,
                       passed=bool(np.all(mism <= tolerance)))


@dataclass(frozen=True)
class GapReport:
    """Pairwise modulus condition for the weight and the fundamental-gap
    bound mu_1 >= 3 pi^2 / d^2 for the squared-weight measure."""

    diameter: float
    convention: str
    pair_x: np.ndarray = field(repr=False)
    pair_y: np.ndarray = field(repr=False)
    lhs: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    margins: np.ndarray = field(repr=False)
    condition_satisfied: bool = False
    min_margin: float = 0.0
    mu_1: float = 0.0
    bound: float = 0.0
    bound_tolerance: float = 1e-3
    bound_satisfied: bool = False

    def csv_rows(self):
        header = ["x", "y", "lhs", "rhs", "margin"]
        rows = [[self.pair_x[i], self.pair_y[i], self.lhs[i], self.rhs[i],
                 self.margins[i]] for i in range(len(self.pair_x))]
        return header, rows

    def to_dict(self):
        return {
            "diameter": self.diameter,
            "convention": self.convention,
            "condition_satisfied": bool(self.condition_satisfied),
            "min_margin": self.min_margin,
            "mu_1": self.mu_1,
            "bound": self.bound,
            "bound_tolerance": self.bound_tolerance,
            "bound_satisfied": bool(self.bound_satisfied),
        }


def gap_check(domain: IntervalDomain, weight: WeightSpec, n_pairs: int,
              n: int, convention: str = MODEL_CONSISTENT,
              bound_tolerance: float = 1e-3,
              opts: SolveOptions | None = None) -> GapReport:
    """Check the pairwise modulus condition on the weight density f and
    compare the first drift eigenvalue (measure f^2) with 3 pi^2 / d^2.

    Conventions (both report the condition as lhs >= rhs, margin = lhs-rhs):

    * ``paper-literal``: lhs is the log-density difference
      (log f)'(y) - (log f)'(x) signed along y - x, rhs is
      (4 pi / d) tan(pi |y-x| / d): the condition in its original printed
      form.  The model density sin(pi x / d) violates it.
    * ``model-consistent``: lhs is the weight-exponent difference
      -2[(log f)'(y) - (log f)'(x)] signed along y - x, rhs is
      (4 pi / d) tan(pi |y-x| / (2 d)): the half-argument form under
      which the model density achieves equality at pairs symmetric
      about the midpoint.

    Pairs whose tangent argument is within 1e-6 of a pole are skipped.
    """
    if convention not in (MODEL_CONSISTENT, PAPER_LITERAL):
        raise ValueError(f"unknown convention {convention!r}")
    opts = opts or SolveOptions()
    d = domain.diameter
    points = np.linspace(domain.a, domain.b, n_pairs + 2)[1:-1]
    fvals = np.asarray(weight.f_value(points))
    if np.any(fvals <= 0):
        raise AssemblyError(
            f"weight density is non-positive on the pair grid "
            f"(x = {points[np.argmax(fvals <= 0)]!r})")
    slope = np.asarray(weight.dlogf(points))

    xs, ys = np.meshgrid(points, points, indexing="ij")
    xs, ys = xs.ravel(), ys.ravel()
    keep = xs != ys
    xs, ys = xs[keep], ys[keep]
    sep = np.abs(ys - xs)
    if convention == PAPER_LITERAL:
        arg = np.pi * sep / d
        pole = np.pi / 2.0
    else:
        arg = np.pi * sep / (2.0 * d)
        pole = np.pi / 2.0
    ok = np.abs(arg - pole) >= 1e-6
    xs, ys, sep, arg = xs[ok], ys[ok], sep[ok], arg[ok]
    if len(xs) == 0:
        raise AssemblyError("pair grid is saturated by tangent poles")

    sl = dict(zip(points, slope))
    slope_x = np.array([sl[x] for x in xs])
    slope_y = np.array([sl[y] for y in ys])
    sign = np.sign(ys - xs)
    diff = (slope_y - slope_x) * sign
    if convention == PAPER_LITERAL:
        lhs = diff
        rhs = (4.0 * np.pi / d) * np.tan(arg)
    else:
        lhs = -2.0 * diff
        rhs = (4.0 * np.pi / d) * np.tan(arg)
    margins = lhs - rhs

    result = drift_spectrum(domain, weight.squared(), "neumann", n, 2, opts)
    mu1 = float(result.eigenvalues[1])
    bound = 3.0 * np.pi**2 / d**2
    return GapReport(
        diameter=d, convention=convention, pair_x=xs, pair_y=ys,
        lhs=lhs, rhs=rhs, margins=margins,
        condition_satisfied=bool(np.min(margins) >= -1e-9),
        min_margin=float(np.min(margins)),
        mu_1=mu1, bound=bound, bound_tolerance=bound_tolerance,
        bound_satisfied=bool(mu1 >= bound - bound_tolerance))


@dataclass(frozen=True)
class ResidualReport:
    """Flatness structure of a thin-domain eigenfunction: the transverse
    second derivative at the bottom must track (log f)' times the slope of
    the bottom trace, and the function must approach the quadratic model
    built from its own trace."""

    k: int
    epsilons: list
    sup_residuals: np.ndarray = field(repr=False)
    model_distances: np.ndarray = field(repr=False)
    traces: dict = field(repr=False)  # eps -> dict of nodal arrays
    residual_decreasing: bool = False
    distance_decreasing: bool = False

    def csv_rows(self):
        header = ["epsilon", "k", "sup_residual", "l2_model_distance"]
        rows = [[eps, self.k, self.sup_residuals[i], self.model_distances[i]]
                for i, eps in enumerate(self.epsilons)]
        return header, rows

    def to_dict(self):
        return {
            "k": self.k,
            "epsilons": list(self.epsilons),
            "sup_residuals": list(self.sup_residuals),
            "model_distances": list(self.model_distances),
            "residual_decreasing": bool(self.residual_decreasing),
            "distance_decreasing": bool(self.distance_decreasing),
        }


def eigenfunction_residual(domain: IntervalDomain, weight: WeightSpec,
                           eps_list, nx: int, nt: int, k: int = 1,
                           opts: SolveOptions | None = None) -> ResidualReport:
    """For each epsilon, measure how well the k-th thin eigenfunction
    satisfies the flat-limit structure.

    All derivative estimates live in the reference coordinates of the
    mapped grid with exact metric factors: the second y-derivative at the
    bottom is the one-sided second difference over the three bottom layers
    scaled by (eps f)^-2; the trace slope uses central differences on the
    base nodes.  The model function is the trace plus half the squared
    height times the trace-slope term; the reported distance is taken
    after projecting out the scale (an M-orthogonal alignment)."""
    opts = opts or SolveOptions()
    if nt < 3:
        raise MeshError("the one-sided second difference needs nt >= 3")
    eps_list = _check_eps_list(eps_list, minimum=1)

    sup_res = np.zeros(len(eps_list))
    distances = np.zeros(len(eps_list))
    traces = {}
    for i, eps in enumerate(eps_list):
        spec = ThinDomainSpec(domain, weight, eps)
        grid = build_mapped_grid(spec, nx, nt)
        pencil = assemble_thin_2d(grid)
        result = _solved(pencil, k + 1, opts)
        v = result.eigenvectors[:, k].reshape(nx + 1, nt + 1)
        x = grid.x_nodes
        hx = x[1] - x[0]
        dt = 1.0 / nt
        f_nodes = np.asarray(weight.f_value(x))

        psi = v[:, 0].copy()
        dpsi = np.empty_like(psi)
        dpsi[1:-1] = (psi[2:] - psi[:-2]) / (2.0 * hx)
        dpsi[0] = (psi[1] - psi[0]) / hx
        dpsi[-1] = (psi[-1] - psi[-2]) / hx

        d2t = (v[:, 0] - 2.0 * v[:, 1] + v[:, 2]) / dt**2
        interior = slice(1, nx)
        d2y = d2t[interior] / (eps * f_nodes[interior]) ** 2
        dlogf = np.asarray(weight.dlogf(x[interior]))
        resid = d2y - dlogf * dpsi[interior]
        sup_res[i] = float(np.max(np.abs(resid)))

        coeff = np.zeros_like(psi)
        coeff[interior] = dlogf * dpsi[interior]
        coeff[0], coeff[-1] = coeff[1], coeff[-2]
        y_nodes = eps * f_nodes[:, None] * grid.t_nodes[None, :]
        model = (psi[:, None] + 0.5 * y_nodes**2 * coeff[:, None]).ravel()

        vec = result.eigenvectors[:, k]
        m_model = pencil.M @ model
        scale = float(vec @ m_model) / float(model @ m_model)
        diff = vec - scale * model
        distances[i] = float(np.sqrt(diff @ (pencil.M @ diff))
                             / np.sqrt(vec @ (pencil.M @ vec)))
        traces[eps] = {
            "x": x, "bottom_trace": psi, "bottom_slope": dpsi,
            "transverse_second": np.concatenate(([np.nan], d2y, [np.nan])),
            "model_coefficient": coeff,
            "model_values": model.reshape(nx + 1, nt + 1),
        }

    sup_dec = bool(np.all(np.diff(sup_res) < 0)) if len(eps_list) > 1 else True
    dist_dec = bool(np.all(np.diff(distances) < 0)) if len(eps_list) > 1 else True
    return ResidualReport(k=k, epsilons=eps_list, sup_residuals=sup_res,
                          model_distances=distances, traces=traces,
                          residual_decreasing=sup_dec,
                          distance_decreasing=dist_dec)


@dataclass(frozen=True)
class Prop4Report:
    """Random-trial partial-sum inequality: orthogonal trial sets bound
    the eigenvalue sum from above through their Rayleigh quotients."""

    k: int
    trials: int
    eigen_sum: float
    min_margin: float
    all_hold: bool
    equality_gap: float
    equality_ok: bool

    def csv_rows(self):
        header = ["trial_count", "k", "eigen_sum", "min_margin", "equality_gap"]
        return header, [[self.trials, self.k, self.eigen_sum,
                         self.min_margin, self.equality_gap]]

    def to_dict(self):
        return {
            "k": self.k,
            "trials": self.trials,
            "eigen_sum": self.eigen_sum,
            "min_margin": self.min_margin,
            "all_hold": bool(self.all_hold),
            "equality_gap": self.equality_gap,
            "equality_ok": bool(self.equality_ok),
        }


def prop4_trials(domain: IntervalDomain, weight: WeightSpec | None, n: int,
                 k: int, trials: int = 100, seed: int = 42,
                 opts: SolveOptions | None = None) -> Prop4Report:
    """For ``trials`` random M-orthogonal sets xi_0..xi_k, check
    sum_j mu_j <= sum_j Rayleigh(xi_j); with the eigenvectors themselves
    the two sides agree to 1e-10 (relative)."""
    opts = opts or SolveOptions()
    mesh = build_interval_mesh(domain, n)
    pencil = assemble_drift_1d(mesh, weight, bc="neumann")
    result = _solved(pencil, k + 1, opts)
    mu_sum = float(np.sum(result.eigenvalues))
    K, M = pencil.K, pencil.M

    rng = np.random.default_rng(seed)
    min_margin = np.inf
    for _ in range(trials):
        xi = rng.standard_normal((pencil.dof_count, k + 1))
        # M-orthogonalize by Cholesky of the Gram matrix
        g = xi.T @ (M @ xi)
        L = np.linalg.cholesky((g + g.T) * 0.5)
        xi = sla.solve_triangular(L, xi.T, lower=True).T
        rq = np.einsum("ij,ij->j", xi, K @ xi) / np.einsum("ij,ij->j", xi, M @ xi)
        min_margin = min(min_margin, float(np.sum(rq) - mu_sum))

    v = result.eigenvectors
    rq_eig = np.einsum("ij,ij->j", v, K @ v) / np.einsum("ij,ij->j", v, M @ v)
    equality_gap = abs(float(np.sum(rq_eig)) - mu_sum)
    scale = max(1.0, abs(mu_sum))
    return Prop4Report(
        k=k, trials=trials, eigen_sum=mu_sum,
        min_margin=min_margin,
        all_hold=bool(min_margin >= -1e-10 * scale),
        equality_gap=equality_gap,
        equality_ok=bool(equality_gap <= 1e-10 * scale))
