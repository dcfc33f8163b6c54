"""Discrete solvers for the reduced Einstein system on the orbit space.

The quotient metric enters in gauge form dx^2 + mu^2 dy^2 throughout this
module (flat means mu = 1); operators are assembled in flux form so that
midpoint weights stay finite where the fields degenerate on the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import lsmr, splu

from .metrics import QuotientMetric, det2
from .orbit_space import Grid

SIDES = ("y0", "x1", "y1", "x0")   # counterclockwise from the y=0 edge


def _check_gauge(q: QuotientMetric):
    if not q.is_gauge:
        raise ValueError("solvers support the gauge quotient form only")


def _interior_index(grid: Grid):
    nx, ny = grid.shape
    ii, jj = np.meshgrid(np.arange(1, nx - 1), np.arange(1, ny - 1),
                         indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    lut = -np.ones(grid.shape, dtype=int)
    lut[ii, jj] = np.arange(ii.size)
    return ii, jj, lut


def _flux_weights(mu: np.ndarray, grid: Grid):
    """Arithmetic-midpoint weights mu_{i+1/2,j} and companions."""
    mu_e = 0.5 * (mu[1:, :] + mu[:-1, :])      # between i and i+1
    mu_n = 0.5 * (mu[:, 1:] + mu[:, :-1])      # between j and j+1
    return mu_e, mu_n


def laplace_beltrami_system(q: QuotientMetric, grid: Grid):
    """Stiffness K and diagonal mass M with K phi = lambda M phi the
    Dirichlet eigenproblem of -Delta on the interior nodes.

    For dx^2 + mu^2 dy^2 the operator is
    Delta u = (1/mu)[d_x(mu u_x) + d_y(u_y / mu)], discretized in flux form
    with arithmetic midpoint weights (second order, and finite where mu
    vanishes on degenerate sides).
    """
    _check_gauge(q)
    if grid.periodic:
        raise ValueError("Dirichlet eigenproblem needs a rectangle domain")
    mu = np.sqrt(q.mu2)
    ii, jj, lut = _interior_index(grid)
    n = ii.size
    mu_e, mu_n = _flux_weights(mu, grid)
    with np.errstate(divide="ignore"):
        inv_mu_n = 1.0 / mu_n

    rows, cols, vals = [], [], []

    def add(r, i2, j2, v):
        c = lut[i2, j2]
        if c >= 0:
            rows.append(r)
            cols.append(c)
            vals.append(v)

    hx2, hy2 = grid.hx**2, grid.hy**2
    for r in range(n):
        i, j = ii[r], jj[r]
        we = mu_e[i, j] / hx2
        ww = mu_e[i - 1, j] / hx2
        wn = inv_mu_n[i, j] / hy2
        ws = inv_mu_n[i, j - 1] / hy2
        add(r, i, j, we + ww + wn + ws)
        add(r, i + 1, j, -we)
        add(r, i - 1, j, -ww)
        add(r, i, j + 1, -wn)
        add(r, i, j - 1, -ws)
    K = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    M = sparse.diags(mu[ii, jj])
    return K, M, (ii, jj, lut)


@dataclass
class EigenResult:
    lambda1: float
    phi: np.ndarray
    residual: float
    iterations: int

    @property
    def einstein_constant(self) -> float:
        return 0.5 * self.lambda1


def principal_eigenpair(q: QuotientMetric, grid: Grid, tol: float = 1e-10,
                        maxiter: int = 10_000) -> EigenResult:
    """Smallest Dirichlet eigenpair of -Delta by inverse power iteration.

    The eigenfunction is returned on the full grid (zero boundary),
    normalized to sup = 1 and positive in the interior.  Stops when the
    Rayleigh quotient moves less than `tol`; raises on hitting `maxiter`.
    """
    K, M, (ii, jj, _) = laplace_beltrami_system(q, grid)
    lu = splu(K.tocsc())
    mdiag = M.diagonal()
    v = np.ones(ii.size)
    lam = lam_old = np.inf
    res = np.inf
    for it in range(1, maxiter + 1):
        w = lu.solve(mdiag * v)
        w /= np.sqrt(np.dot(w, mdiag * w))
        lam = float(np.dot(w, K @ w) / np.dot(w, mdiag * w))
        res = float(np.abs(K @ w - lam * (mdiag * w)).max()
                    / np.abs(mdiag * w).max())
        v = w
        # the eigenvalue settles twice as fast as the vector; require both
        if abs(lam - lam_old) < tol and res < 1e-9 * max(abs(lam), 1.0):
            break
        lam_old = lam
    else:
        raise RuntimeError(f"eigen iteration did not converge in {maxiter} steps")
    if v.sum() < 0:
        v = -v
    phi = np.zeros(grid.shape)
    phi[ii, jj] = v
    phi /= phi.max()
    return EigenResult(lambda1=lam, phi=phi, residual=res, iterations=it)


# ---------------------------------------------------------------------------
# Drift PDE: -1/2 Delta u + (1/2 phi) <grad phi, grad u> + 2 sec u = Lambda u
# ---------------------------------------------------------------------------


@dataclass
class DriftPDEProblem:
    """Dirichlet problem for the linear equation every orbit-metric entry
    satisfies.  `boundary` maps side names ('y0', 'x1', 'y1', 'x0') to
    trace arrays along that side; adjacent traces must agree at corners."""

    grid: Grid
    q: QuotientMetric
    phi: np.ndarray
    lam: float
    sec: np.ndarray | float = 0.0
    boundary: dict = field(default_factory=dict)

    def boundary_field(self) -> np.ndarray:
        nx, ny = self.grid.shape
        g = np.zeros((nx, ny))
        if "y0" in self.boundary:
            g[:, 0] = self.boundary["y0"]
        if "y1" in self.boundary:
            g[:, -1] = self.boundary["y1"]
        if "x0" in self.boundary:
            g[0, :] = self.boundary["x0"]
        if "x1" in self.boundary:
            g[-1, :] = self.boundary["x1"]
        return g


@dataclass
class DriftResult:
    u: np.ndarray
    residual: float
    fallback: bool = False
    message: str = ""


def drift_operator(problem: DriftPDEProblem):
    """Sparse interior operator and the boundary-coupling RHS.

    Written as -1/2 phi div_Sigma(phi^{-1} grad_Sigma u) + (2 sec - Lambda) u,
    discretized with flux differences; phi midpoints are arithmetic means,
    so the weights stay finite at the boundary where phi = 0 and the drift
    direction follows the interior limit.
    """
    grid, q = problem.grid, problem.q
    _check_gauge(q)
    mu = np.sqrt(q.mu2)
    phi = problem.phi
    sec = np.broadcast_to(np.asarray(problem.sec, dtype=float), grid.shape)
    ii, jj, lut = _interior_index(grid)
    n = ii.size
    mu_e, mu_n = _flux_weights(mu, grid)
    phi_e, phi_n = _flux_weights(phi, grid)
    bfield = problem.boundary_field()

    rows, cols, vals = [], [], []
    rhs = np.zeros(n)

    hx2, hy2 = grid.hx**2, grid.hy**2
    for r in range(n):
        i, j = ii[r], jj[r]
        c0 = -0.5 * phi[i, j] / mu[i, j]
        we = c0 * mu_e[i, j] / (phi_e[i, j] * hx2)
        ww = c0 * mu_e[i - 1, j] / (phi_e[i - 1, j] * hx2)
        wn = c0 / (mu_n[i, j] * phi_n[i, j] * hy2)
        ws = c0 / (mu_n[i, j - 1] * phi_n[i, j - 1] * hy2)
        diag = -(we + ww + wn + ws) + 2.0 * sec[i, j] - problem.lam
        for (i2, j2, v) in ((i, j, diag), (i + 1, j, we), (i - 1, j, ww),
                            (i, j + 1, wn), (i, j - 1, ws)):
            c = lut[i2, j2]
            if c >= 0:
                rows.append(r)
                cols.append(c)
                vals.append(v)
            else:
                rhs[r] -= v * bfield[i2, j2]
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return A, rhs, (ii, jj)


def solve_drift_pde(problem: DriftPDEProblem) -> DriftResult:
    """Direct sparse solve of the drift problem; on a singular
    factorization (the operator is degenerate exactly when Lambda collides
    with an eigenvalue) falls back to a least-squares solution and reports
    the residual."""
    A, rhs, (ii, jj) = drift_operator(problem)
    fallback = False
    message = ""
    try:
        lu = splu(A.tocsc())
        x = lu.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise RuntimeError("non-finite direct solution")
    except RuntimeError as exc:
        fallback = True
        message = f"direct factorization failed ({exc}); least-squares projection"
        x = lsmr(A, rhs, atol=1e-12, btol=1e-12, maxiter=20000)[0]
    scale = max(np.abs(rhs).max(), np.abs(A @ x).max(), 1e-300)
    residual = float(np.abs(A @ x - rhs).max() / scale)
    u = problem.boundary_field()
    u[ii, jj] = x
    return DriftResult(u=u, residual=residual, fallback=fallback, message=message)


def slope_boundary_traces(slopes, d0_sides: dict) -> dict:
    """Dirichlet traces of the three orbit-metric entries from edge labels.

    slopes: mapping side -> Slope; d0_sides: side -> squared orbit-length
    profile along that side.  Returns {'g11': {...}, 'g12': {...},
    'g22': {...}} of per-side arrays via the trace [[q^2, pq],[pq, p^2]]*d0.
    """
    out = {"g11": {}, "g12": {}, "g22": {}}
    for side, slope in slopes.items():
        m = slope.trace_matrix()
        d0 = np.asarray(d0_sides[side], dtype=float)
        out["g11"][side] = m[0, 0] * d0
        out["g12"][side] = m[0, 1] * d0
        out["g22"][side] = m[1, 1] * d0
    return out


# ---------------------------------------------------------------------------
# Edge ODE: -(sqrt(d0))'' / sqrt(d0) + 2 sec = Lambda
# ---------------------------------------------------------------------------


@dataclass
class EdgeODEResult:
    t: np.ndarray
    sqrt_d0: np.ndarray
    d0: np.ndarray
    endpoint_value: float      # sqrt(d0)(l), should be 0
    endpoint_slope: float      # d/dt sqrt(d0)(l), should be -1
    consistent: bool
    ode_residual: float


def solve_edge_ode(sec_profile, length: float, lam: float,
                   n_steps: int = 4096, tol: float = 1e-8) -> EdgeODEResult:
    """Integrate v'' = (2 sec - Lambda) v with v(0) = 0, v'(0) = 1 by
    classical RK4 and check the far-end conditions v(l) = 0, v'(l) = -1.

    The left data fix the solution completely, so the boundary value
    problem is over-determined: an endpoint mismatch beyond `tol` means
    (Lambda, length, sec) are not mutually compatible and the result is
    flagged inconsistent.  In the constant-curvature case compatibility
    is the length condition l*sqrt(Lambda - 2 sec) = pi.
    """
    sec_arr = sec_profile if callable(sec_profile) else (lambda t: np.full_like(np.asarray(t, float), float(sec_profile)))
    t_try = np.linspace(0.0, length, 64)
    if lam - 2.0 * float(np.max(sec_arr(t_try))) <= 0:
        raise ValueError("need Lambda - 2*sup(sec) > 0 for a collapsing profile")

    h = length / n_steps
    t = np.linspace(0.0, length, n_steps + 1)
    v = np.empty(n_steps + 1)
    w = np.empty(n_steps + 1)
    v[0], w[0] = 0.0, 1.0

    def rhs(tt, y):
        return np.array([y[1], (2.0 * float(sec_arr(tt)) - lam) * y[0]])

    y = np.array([0.0, 1.0])
    for k in range(n_steps):
        tk = t[k]
        k1 = rhs(tk, y)
        k2 = rhs(tk + h / 2, y + h / 2 * k1)
        k3 = rhs(tk + h / 2, y + h / 2 * k2)
        k4 = rhs(tk + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        v[k + 1], w[k + 1] = y

    # fourth-order check of the ODE on the stored profile, so the stencil's
    # own truncation stays below the solver's RK4 error
    vv = v[2:-2]
    d2v = (-v[4:] + 16 * v[3:-1] - 30 * vv + 16 * v[1:-3] - v[:-4]) / (12 * h**2)
    res = np.abs(d2v - (2.0 * sec_arr(t[2:-2]) - lam) * vv)
    ode_residual = float(res.max())

    consistent = bool(abs(y[0]) <= tol * max(1.0, length)
                      and abs(y[1] + 1.0) <= tol * 10)
    return EdgeODEResult(t=t, sqrt_d0=v, d0=v**2,
                         endpoint_value=float(y[0]),
                         endpoint_slope=float(y[1]),
                         consistent=consistent,
                         ode_residual=ode_residual)


def edge_length_constraint(length: float, lam: float, sec: float) -> float:
    """l * sqrt(Lambda - 2 sec) - pi; zero exactly for compatible data."""
    return float(length * np.sqrt(lam - 2.0 * sec) - np.pi)


# ---------------------------------------------------------------------------
# Geodesic identity and the maximum-principle witness
# ---------------------------------------------------------------------------


def geodesic_residual(g_omega_samples: np.ndarray, ds: float, lam: float,
                      sec_samples=0.0) -> np.ndarray:
    """Pointwise residual of
    sec - (det g_O)^{-1/2} (sqrt(det g_O))'' + det(g_O')/(2 det g_O) - Lambda
    along a unit-speed geodesic sampled with step ds.  Endpoints are NaN
    (no centered stencil)."""
    gO = np.asarray(g_omega_samples, dtype=float)
    if gO.ndim != 3 or gO.shape[1:] != (2, 2):
        raise ValueError("expected samples of shape (n, 2, 2)")
    det = det2(gO)
    if np.any(det[1:-1] <= 0):
        raise ValueError("degenerate orbit metric along the geodesic")
    root = np.sqrt(det)
    sec = np.broadcast_to(np.asarray(sec_samples, dtype=float), root.shape)
    out = np.full(root.shape, np.nan)
    d2root = (root[2:] - 2 * root[1:-1] + root[:-2]) / ds**2
    dg = (gO[2:] - gO[:-2]) / (2 * ds)
    out[1:-1] = (sec[1:-1] - d2root / root[1:-1]
                 + det2(dg) / (2 * det[1:-1]) - lam)
    return out


def grid_line_samples(field: np.ndarray, axis: int, index: int) -> np.ndarray:
    """Samples of a (nx, ny, ...) field along a coordinate grid line."""
    return field[:, index] if axis == 0 else field[index, :]


@dataclass
class WitnessResult:
    w: np.ndarray
    argmax: tuple[int, int]
    max_abs: float


def maximum_principle_witness(u: np.ndarray, u0: np.ndarray,
                              grid: Grid) -> WitnessResult:
    """Quotient w = u/u0 with boundary values filled by the limiting
    quotient (ratio of one-sided normal derivatives; ratio of second
    differences at corners where u0 vanishes quadratically)."""
    u = np.asarray(u, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    scale = np.abs(u0).max()
    inner = grid.interior_slice()
    if np.any(np.abs(u0[inner]) <= 1e-14 * scale):
        raise ValueError("u0 vanishes at an interior node")
    w = np.full(grid.shape, np.nan)
    mask = np.abs(u0) > 1e-12 * scale
    w[mask] = u[mask] / u0[mask]
    if not grid.periodic:
        # limiting quotient on boundary nodes where u0 = 0
        def oneside(f, i, j, di, dj):
            return -3 * f[i, j] + 4 * f[i + di, j + dj] - f[i + 2 * di, j + 2 * dj]

        nx, ny = grid.shape
        edges = ([(0, j, 1, 0) for j in range(ny)]
                 + [(nx - 1, j, -1, 0) for j in range(ny)]
                 + [(i, 0, 0, 1) for i in range(nx)]
                 + [(i, ny - 1, 0, -1) for i in range(nx)])
        for (i, j, di, dj) in edges:
            if mask[i, j]:
                continue
            num = oneside(u, i, j, di, dj)
            den = oneside(u0, i, j, di, dj)
            if abs(den) > 1e-10 * scale:
                w[i, j] = num / den
            else:
                # corner: both vanish to second order along this ray
                num2 = u[i + 2 * di, j + 2 * dj] - 2 * u[i + di, j + dj] + u[i, j]
                den2 = u0[i + 2 * di, j + 2 * dj] - 2 * u0[i + di, j + dj] + u0[i, j]
                w[i, j] = num2 / den2 if abs(den2) > 1e-12 * scale else \
                    w[i + di, j + dj]
    aw = np.abs(np.where(np.isfinite(w), w, -np.inf))
    k = int(np.argmax(aw))
    argmax = np.unravel_index(k, w.shape)
    return WitnessResult(w=w, argmax=(int(argmax[0]), int(argmax[1])),
                         max_abs=float(aw.max()))
