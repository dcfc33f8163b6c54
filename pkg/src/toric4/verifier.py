"""Einstein-condition verification and the flat-square classification runs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curvature import CurvatureEngine, SigmaGeometry, fundamental_forms
from .metrics import (DiagonalMetricData, InvariantMetricData, QuotientMetric,
                      det2, orbit_volume, square_family, sym2)
from .orbit_space import Grid, Slope
from .solvers import (DriftPDEProblem, principal_eigenpair, slope_boundary_traces,
                      solve_drift_pde, solve_edge_ode)


@dataclass
class EinsteinReport:
    lam: float
    sup_residual: float
    vertical_residual: float
    horizontal_residual: float
    mixed_residual: float
    tolerance: float
    margin_nodes: int
    verdict: str                      # "einstein" | "not_einstein"
    grid_shape: tuple[int, int] = (0, 0)

    @property
    def is_einstein(self) -> bool:
        return self.verdict == "einstein"


def einstein_residual(data, lam: float, margin_frac: float = 0.25,
                      tol_factor: float = 50.0) -> EinsteinReport:
    """Sup-norm of Ric - Lambda*g over interior sample nodes.

    The residual is measured componentwise on the assembled 4x4 frame; the
    sampling margin is a fixed fraction of each side (never below four
    cells), because the finite-difference error of any fixed-order engine
    is Theta(1) on a rim that shrinks with h.  The verdict compares
    against the resolution-aware tolerance tol_factor * h^2.
    """
    if lam <= 0:
        raise ValueError("Einstein constant must be positive here")
    if isinstance(data, DiagonalMetricData):
        data = data.to_invariant()
    eng = CurvatureEngine.for_data(data)
    G = data.full_metric_field()
    R = eng.ricci - lam * G
    grid = data.grid
    m = grid.margin_nodes(margin_frac, minimum=4)
    sl = grid.interior_slice(m) if not grid.periodic else (slice(None),) * 2
    if not np.all(eng.ok[sl]):
        raise ValueError("metric degenerate at a sample node")
    vert = float(np.abs(R[sl][..., 2:, 2:]).max())
    horiz = float(np.abs(R[sl][..., :2, :2]).max())
    mixed = float(np.abs(R[sl][..., :2, 2:]).max())
    sup = max(vert, horiz, mixed)
    h = max(grid.hx, grid.hy)
    tol = tol_factor * h * h
    verdict = "einstein" if sup <= tol else "not_einstein"
    return EinsteinReport(lam=lam, sup_residual=sup, vertical_residual=vert,
                          horizontal_residual=horiz, mixed_residual=mixed,
                          tolerance=tol, margin_nodes=m, verdict=verdict,
                          grid_shape=grid.shape)


def det_obstruction(g_omega: np.ndarray, phi: np.ndarray, grid: Grid,
                    margin: int = 1):
    """Field det(g_O) - phi^2 and its interior sup.

    Zero identically is necessary for the Einstein condition: the orbit
    volume must coincide with the principal eigenfunction.
    """
    f = det2(g_omega) - np.asarray(phi) ** 2
    sl = grid.interior_slice(margin) if not grid.periodic else (slice(None),) * 2
    return f, float(np.abs(f[sl]).max())


@dataclass
class SquareActionCase:
    p: int
    drift_errors: dict
    drift_residuals: dict
    det_obstruction_sup: float
    det_obstruction_center: float
    einstein: EinsteinReport

    @property
    def is_einstein(self) -> bool:
        return self.einstein.is_einstein


def _square_edge_profile(grid: Grid):
    """Squared orbit-length profiles along the edges of the flat
    [0, pi]^2 square, from the edge boundary-value ODE.

    The edge data fix their own constant: sec = 0 and l = pi force
    Lambda_edge = (pi/l)^2 = 1.  Step counts are chosen so ODE samples
    land exactly on grid nodes.
    """
    lam_edge = (np.pi / np.pi) ** 2
    kx = max(1, 4096 // (grid.nx - 1))
    ode = solve_edge_ode(0.0, np.pi, lam_edge, n_steps=kx * (grid.nx - 1))
    d0x = ode.d0[::kx]
    if grid.ny == grid.nx:
        d0y = d0x.copy()
    else:
        ky = max(1, 4096 // (grid.ny - 1))
        d0y = solve_edge_ode(0.0, np.pi, lam_edge,
                             n_steps=ky * (grid.ny - 1)).d0[::ky]
    return d0x, d0y, ode


def classify_square_actions(p_values, resolution: int = 129,
                            margin_frac: float = 0.25) -> list[SquareActionCase]:
    """For each p solve the three entry PDEs with the slope boundary data
    of the action [(0,1), (1,0), (p,1), (1,0)] on the flat square, then
    test the determinant obstruction and the full Einstein residual.

    The Einstein verdict is expected exactly for p = 0.
    """
    base = square_family(0, resolution)
    grid, q = base.grid, base.q
    eig = principal_eigenpair(q, grid)
    lam = eig.einstein_constant
    d0x, d0y, _ = _square_edge_profile(grid)

    out = []
    for p in sorted(set(int(p) for p in p_values)):
        family = square_family(p, resolution)
        slopes = {"y0": Slope(0, 1), "x1": Slope(1, 0),
                  "y1": Slope(p, 1), "x0": Slope(1, 0)}
        d0s = {"y0": d0x, "y1": d0x, "x0": d0y, "x1": d0y}
        traces = slope_boundary_traces(slopes, d0s)
        entries = {}
        drift_errors = {}
        drift_residuals = {}
        closed = {"g11": family.g_omega[..., 0, 0],
                  "g12": family.g_omega[..., 0, 1],
                  "g22": family.g_omega[..., 1, 1]}
        for key in ("g11", "g12", "g22"):
            r = solve_drift_pde(DriftPDEProblem(grid, q, eig.phi, lam,
                                                0.0, traces[key]))
            entries[key] = r.u
            drift_errors[key] = float(np.abs(r.u - closed[key]).max())
            drift_residuals[key] = r.residual
        g_omega = sym2(entries["g11"], entries["g12"], entries["g22"])
        data = InvariantMetricData(family.space, grid, q, g_omega)
        _, obst_sup = det_obstruction(g_omega, eig.phi, grid)
        ic, jc = grid.nx // 2, grid.ny // 2
        obst_center = float(det2(g_omega)[ic, jc] - eig.phi[ic, jc] ** 2)
        report = einstein_residual(data, lam, margin_frac)
        out.append(SquareActionCase(p=p, drift_errors=drift_errors,
                                    drift_residuals=drift_residuals,
                                    det_obstruction_sup=obst_sup,
                                    det_obstruction_center=obst_center,
                                    einstein=report))
    return out


def scalar_identity_check(data, margin_frac: float = 0.25) -> dict:
    """Residual fields of two scalar identities of polar metrics:

    engine_vs_formula : Scal - (Scal_S - 2 lap(phi)/phi + |H|^2 - |B|^2)
    einstein_necessary: Scal_S + |H|^2 - |B|^2

    The first vanishes to O(h^2) for any polar data (it is the reduced
    scalar-curvature formula); the second vanishes only when the data are
    compatible with the Einstein condition.
    """
    if isinstance(data, DiagonalMetricData):
        data = data.to_invariant()
    if not data.is_polar:
        raise ValueError("scalar identities apply to polar data")
    grid = data.grid
    eng = CurvatureEngine.for_data(data)
    sig = SigmaGeometry(grid, data.q)
    phi = orbit_volume(data.g_omega)
    ff = fundamental_forms(data.q, data.g_omega, grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        lap_phi = sig.laplacian(phi)
        formula = (2 * sig.gauss_curvature - 2 * lap_phi / phi
                   + ff.normH2 - ff.normB2)
        r1 = eng.scal - formula
        r2 = 2 * sig.gauss_curvature + ff.normH2 - ff.normB2
    m = grid.margin_nodes(margin_frac, minimum=4)
    sl = grid.interior_slice(m) if not grid.periodic else (slice(None),) * 2
    return {"engine_vs_formula": r1, "einstein_necessary": r2,
            "sup_engine_vs_formula": float(np.abs(r1[sl]).max()),
            "sup_einstein_necessary": float(np.abs(r2[sl]).max()),
            "scal": eng.scal}
