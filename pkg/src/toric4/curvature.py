"""Curvature of invariant 4-metrics and the reduced quotient formulas.

Two independent evaluation routes are kept deliberately separate:

* a coordinate finite-difference engine that differentiates the assembled
  4x4 block metric directly (valid for any invariant data, the ground
  truth everything else is tested against), and
* closed reduced formulas on the orbit space (polar vertical/horizontal
  Ricci, mixed Ricci from the connection field, the diagonal-metric
  curvature table, the boundary expansion along an edge).

Conventions.  `riemann[a, b, c, d]` is the fully lowered tensor normalized
so that `riemann[a, b, a, b] / (g_aa g_bb - g_ab^2)` is the sectional
curvature of the coordinate plane (a, b); in particular it is positive on
the round sphere.  Inner-product values <R(A,B)C, D> quoted by the
reduced-formula checks correspond to `riemann[A, B, C, D]`.  The
Laplacian is the analyst's one (negative spectrum), so the orbit-volume
eigenfunction satisfies lap(phi) = -2*Lambda*phi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import (DiagonalMetricData, InvariantMetricData, det2, inv2,
                      orbit_volume, sym2)
from .orbit_space import Grid

# ---------------------------------------------------------------------------
# Coordinate engine
# ---------------------------------------------------------------------------


def _metric_derivatives(G: np.ndarray, grid: Grid):
    """First and second x/y derivatives of a matrix field (nx,ny,n,n)."""
    dG = np.stack([grid.d_x(G), grid.d_y(G)], axis=2)
    n = G.shape[-1]
    ddG = np.zeros(G.shape[:2] + (2, 2, n, n))
    ddG[:, :, 0, 0] = grid.d_xx(G)
    ddG[:, :, 1, 1] = grid.d_yy(G)
    ddG[:, :, 0, 1] = grid.d_xy(G)
    ddG[:, :, 1, 0] = ddG[:, :, 0, 1]
    return dG, ddG


def _lowered_christoffel(dG: np.ndarray, n: int) -> np.ndarray:
    """Gl[..., l, i, j] = (d_i g_jl + d_j g_il - d_l g_ij)/2.

    Only derivative directions 0, 1 exist; indices >= 2 contribute zero.
    """
    shape = dG.shape[:2]
    Gl = np.zeros(shape + (n, n, n))
    for l in range(n):
        for i in range(n):
            for j in range(n):
                t = np.zeros(shape)
                if i < 2:
                    t = t + dG[:, :, i, j, l]
                if j < 2:
                    t = t + dG[:, :, j, i, l]
                if l < 2:
                    t = t - dG[:, :, l, i, j]
                Gl[:, :, l, i, j] = 0.5 * t
    return Gl


class CurvatureEngine:
    """Finite-difference Christoffel/Ricci/Riemann fields for a metric
    field depending on (x, y) only.

    Supports n = 4 (invariant block metrics) and n = 2 (quotient metrics).
    Nodes where the metric is numerically singular are flagged in
    `ok` and carry garbage output; rectangle boundaries degenerate by
    construction, so samples should stay two stencil widths inside.
    """

    def __init__(self, G: np.ndarray, grid: Grid):
        self.grid = grid
        self.G = np.asarray(G, dtype=float)
        self.n = self.G.shape[-1]
        det = np.linalg.det(self.G)
        scale = max(float(np.abs(self.G).max()), 1.0)
        self.ok = np.abs(det) > 1e-13 * scale**self.n
        Gsafe = np.where(self.ok[..., None, None], self.G, np.eye(self.n))
        self.Ginv = np.linalg.inv(Gsafe)
        self._fields = None

    @staticmethod
    def for_data(data) -> "CurvatureEngine":
        if isinstance(data, DiagonalMetricData):
            data = data.to_invariant()
        return CurvatureEngine(data.full_metric_field(), data.grid)

    # -- field-level ----------------------------------------------------
    def _compute(self):
        if self._fields is not None:
            return self._fields
        n, grid = self.n, self.grid
        dG, ddG = _metric_derivatives(self.G, grid)
        Gl = _lowered_christoffel(dG, n)
        Gam = np.einsum("xykl,xylij->xykij", self.Ginv, Gl)

        ric = np.zeros(grid.shape + (n, n))
        # d_m Gamma^rho_{nu sig} via the product rule keeps the inverse
        # metric pointwise exact; differencing Gamma itself would lose an
        # order near the degenerate boundary.
        dtrG = np.zeros(grid.shape + (2, n))
        for m in range(2):
            dGinv_m = -np.einsum("xyab,xybc,xycd->xyad",
                                 self.Ginv, dG[:, :, m], self.Ginv)
            dGl_m = _lowered_christoffel(ddG[:, :, m], n)
            dGam_m = (np.einsum("xyab,xybij->xyaij", dGinv_m, Gl)
                      + np.einsum("xyab,xybij->xyaij", self.Ginv, dGl_m))
            # term d_m Gamma^m_{nu sig}
            ric += np.einsum("xyns->xysn", dGam_m[:, :, m])
            dtrG[:, :, m] = np.einsum("xyaas->xys", dGam_m)
        for nu in range(2):
            ric[:, :, :, nu] -= dtrG[:, :, nu, :]
        ric += np.einsum("xyaal,xylns->xysn", Gam, Gam)
        ric -= np.einsum("xyanl,xylas->xysn", Gam, Gam)
        scal = np.einsum("xyab,xyab->xy", self.Ginv, ric)
        self._fields = (Gam, ric, scal)
        return self._fields

    @property
    def christoffel(self) -> np.ndarray:
        return self._compute()[0]

    @property
    def ricci(self) -> np.ndarray:
        return self._compute()[1]

    @property
    def scal(self) -> np.ndarray:
        return self._compute()[2]

    # -- node-level -----------------------------------------------------
    def _local_derivatives(self, node, stride: int):
        """(G, dG, ddG) at one node with centered stencils of step
        stride*h; the node must sit 2*stride inside a rectangle."""
        i, j = node
        k = stride
        grid = self.grid
        nx, ny = grid.shape
        if grid.periodic:
            idx = lambda a, b: (a % nx, b % ny)
        else:
            if not (2 * k <= i < nx - 2 * k and 2 * k <= j < ny - 2 * k):
                raise ValueError(
                    f"node {node} closer than 2*stride={2*k} to the boundary")
            idx = lambda a, b: (a, b)

        def g(a, b):
            return self.G[idx(i + a, j + b)]

        hx, hy = k * grid.hx, k * grid.hy
        dG = np.stack([(g(k, 0) - g(-k, 0)) / (2 * hx),
                       (g(0, k) - g(0, -k)) / (2 * hy)])
        ddG = np.zeros((2, 2) + (self.n, self.n))
        ddG[0, 0] = (g(k, 0) - 2 * g(0, 0) + g(-k, 0)) / hx**2
        ddG[1, 1] = (g(0, k) - 2 * g(0, 0) + g(0, -k)) / hy**2
        ddG[0, 1] = (g(k, k) - g(k, -k) - g(-k, k) + g(-k, -k)) / (4 * hx * hy)
        ddG[1, 0] = ddG[0, 1]
        return g(0, 0), dG, ddG

    def riemann_at(self, node, stride: int = 1) -> np.ndarray:
        """Fully lowered Riemann tensor at a node, shape (n, n, n, n)."""
        G0, dG, ddG = self._local_derivatives(node, stride)
        n = self.n
        Ginv = np.linalg.inv(G0)
        Gl = _lowered_christoffel(dG[None, None], n)[0, 0]
        Gam = np.einsum("kl,lij->kij", Ginv, Gl)
        dGam = np.zeros((2, n, n, n))
        for m in range(2):
            dGinv_m = -Ginv @ dG[m] @ Ginv
            dGl_m = _lowered_christoffel(ddG[m][None, None], n)[0, 0]
            dGam[m] = (np.einsum("ab,bij->aij", dGinv_m, Gl)
                       + np.einsum("ab,bij->aij", Ginv, dGl_m))
        # R^rho_{sig mu nu}
        Rup = np.zeros((n, n, n, n))
        for mu in range(n):
            for nu in range(n):
                t = np.einsum("rl,ls->rs", Gam[:, mu], Gam[:, nu]) \
                    - np.einsum("rl,ls->rs", Gam[:, nu], Gam[:, mu])
                if mu < 2:
                    t = t + dGam[mu][:, nu]
                if nu < 2:
                    t = t - dGam[nu][:, mu]
                Rup[:, :, mu, nu] = t
        return np.einsum("ae,ebcd->abcd", G0, Rup)

    def sample(self, node, stride: int = 1) -> "CurvatureSample":
        riem = self.riemann_at(node, stride)
        G0, dG, _ = self._local_derivatives(node, stride)
        Ginv = np.linalg.inv(G0)
        Gl = _lowered_christoffel(dG[None, None], self.n)[0, 0]
        Gam = np.einsum("kl,lij->kij", Ginv, Gl)
        # Ric_{s n} = g^{ma} R_{a s m n}
        ric = np.einsum("ma,asmn->sn", Ginv, riem)
        scal = float(np.einsum("ab,ab->", Ginv, ric))
        return CurvatureSample(node=tuple(node), metric=G0, christoffel=Gam,
                               riemann=riem, ricci=ric, scal=scal)


@dataclass
class CurvatureSample:
    node: tuple[int, int]
    metric: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scal: float

    def symmetry_defect(self) -> float:
        """Largest violation of the algebraic Riemann/Ricci symmetries."""
        R = self.riemann
        d = max(
            np.abs(R + np.swapaxes(R, 0, 1)).max(),
            np.abs(R + np.swapaxes(R, 2, 3)).max(),
            np.abs(R - np.transpose(R, (2, 3, 0, 1))).max(),
            np.abs(self.ricci - self.ricci.T).max(),
        )
        return float(d)


def ricci_from_coordinates(data, node, stride: int = 1) -> CurvatureSample:
    """Curvature at one node from centered differences of the assembled
    block metric; effective step is stride times the grid spacing."""
    return CurvatureEngine.for_data(data).sample(node, stride)


# ---------------------------------------------------------------------------
# Quotient (2D) geometry
# ---------------------------------------------------------------------------


class SigmaGeometry:
    """Differential geometry of the quotient metric on the orbit space."""

    def __init__(self, grid: Grid, q):
        self.grid = grid
        self.q = q
        self.mat = q.matrix()
        self.det = q.det()
        with np.errstate(divide="ignore", invalid="ignore"):
            self.inv = q.inv()
        self._gamma = None
        self._K = None

    @property
    def christoffel(self) -> np.ndarray:
        if self._gamma is None:
            dG = np.stack([self.grid.d_x(self.mat), self.grid.d_y(self.mat)],
                          axis=2)
            Gl = _lowered_christoffel(dG, 2)
            with np.errstate(invalid="ignore"):
                self._gamma = np.einsum("xykl,xylij->xykij", self.inv, Gl)
        return self._gamma

    @property
    def gauss_curvature(self) -> np.ndarray:
        """Sectional curvature field of the quotient metric."""
        if self._K is None:
            if self.q.is_gauge:
                mu = np.sqrt(self.q.mu2)
                with np.errstate(divide="ignore", invalid="ignore"):
                    self._K = -self.grid.d_xx(mu) / mu
            else:
                eng = CurvatureEngine(self.mat, self.grid)
                self._K = 0.5 * eng.scal
        return self._K

    def grad_cov(self, f: np.ndarray) -> np.ndarray:
        """(df/dx, df/dy) stacked on the last axis."""
        return np.stack([self.grid.d_x(f), self.grid.d_y(f)], axis=-1)

    def inner_grad(self, f, g) -> np.ndarray:
        df, dg = self.grad_cov(f), self.grad_cov(g)
        return np.einsum("xyst,xys,xyt->xy", self.inv, df, dg)

    def hessian(self, f: np.ndarray) -> np.ndarray:
        df = self.grad_cov(f)
        H = np.zeros(self.grid.shape + (2, 2))
        H[..., 0, 0] = self.grid.d_xx(f)
        H[..., 1, 1] = self.grid.d_yy(f)
        H[..., 0, 1] = H[..., 1, 0] = self.grid.d_xy(f)
        H -= np.einsum("xykst,xyk->xyst", self.christoffel, df)
        return H

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        return np.einsum("xyst,xyst->xy", self.inv, self.hessian(f))

    def orthonormal_frame(self) -> np.ndarray:
        """E[..., :, k]: coordinate components of an orthonormal frame
        (Gram-Schmidt on d/dx, d/dy)."""
        g = self.mat
        E = np.zeros(self.grid.shape + (2, 2))
        with np.errstate(divide="ignore", invalid="ignore"):
            r11 = np.sqrt(g[..., 0, 0])
            E[..., 0, 0] = 1.0 / r11
            # second vector: (d/dy - (g12/g11) d/dx), normalized
            w = g[..., 1, 1] - g[..., 0, 1] ** 2 / g[..., 0, 0]
            r22 = np.sqrt(w)
            E[..., 0, 1] = -g[..., 0, 1] / (g[..., 0, 0] * r22)
            E[..., 1, 1] = 1.0 / r22
        return E


# ---------------------------------------------------------------------------
# Reduced formulas: polar vertical/horizontal Ricci, fundamental forms
# ---------------------------------------------------------------------------


@dataclass
class FundamentalForms:
    H: np.ndarray        # contravariant mean-curvature vector, (nx, ny, 2)
    normH2: np.ndarray
    normB2: np.ndarray


def fundamental_forms(q, g_omega: np.ndarray, grid: Grid) -> FundamentalForms:
    """Mean curvature H = -grad(phi)/phi of the orbits and the squared
    norms |H|^2, |B|^2 of the mean curvature and second fundamental form.

    Fields are NaN where the orbit volume vanishes (rectangle boundary).
    """
    sig = SigmaGeometry(grid, q)
    phi = orbit_volume(g_omega)
    dphi = sig.grad_cov(phi)
    with np.errstate(divide="ignore", invalid="ignore"):
        H = -np.einsum("xyst,xyt->xys", sig.inv, dphi) / phi[..., None]
        normH2 = np.einsum("xyst,xys,xyt->xy", sig.inv, dphi, dphi) / phi**2
        gOinv = inv2(g_omega)
        M = np.stack([gOinv @ grid.d_x(g_omega), gOinv @ grid.d_y(g_omega)],
                     axis=2)
        normB2 = 0.25 * np.einsum("xyst,xysab,xytba->xy", sig.inv, M, M)
    return FundamentalForms(H=H, normH2=normH2, normB2=normB2)


def quotient_ricci_polar(data: InvariantMetricData | DiagonalMetricData) -> dict:
    """Reduced Ricci of a geometrically polar metric.

    Returns fields 'ric_vv' (orbit block, (nx,ny,2,2)), 'ric_hh'
    (horizontal block in d/dx, d/dy components), 'vertical_trace',
    'horizontal_trace' and 'scal'.  Values are NaN on the degenerate
    boundary; compare on interior nodes.
    """
    if isinstance(data, DiagonalMetricData):
        data = data.to_invariant()
    if not data.is_polar:
        raise ValueError("quotient_ricci_polar requires a polar metric "
                         "(C = 0); use mixed_ricci_defect for the rest")
    grid = data.grid
    sig = SigmaGeometry(grid, data.q)
    gO = data.g_omega
    phi = orbit_volume(gO)
    ff = fundamental_forms(data.q, gO, grid)

    dgO = np.stack([grid.d_x(gO), grid.d_y(gO)], axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        gOinv = inv2(gO)
        lap_gO = np.zeros(grid.shape + (2, 2))
        drift = np.zeros(grid.shape + (2, 2))
        for i in range(2):
            for j in range(i, 2):
                lap_gO[..., i, j] = sig.laplacian(gO[..., i, j])
                drift[..., i, j] = np.einsum("xys,xys->xy", ff.H,
                                             dgO[:, :, :, i, j])
                lap_gO[..., j, i] = lap_gO[..., i, j]
                drift[..., j, i] = drift[..., i, j]
        # (1/2) g^st (d_s gO . gO^{-1} . d_t gO)_{ij}
        quad = 0.5 * np.einsum("xyst,xysab,xybc,xytcd->xyad",
                               sig.inv, dgO, gOinv, dgO)
        ric_vv = -0.5 * lap_gO + 0.5 * drift + quad

        K = sig.gauss_curvature
        hess_phi = sig.hessian(phi)
        lap_phi = np.einsum("xyst,xyst->xy", sig.inv, hess_phi)
        dphi = sig.grad_cov(phi)
        Hcov = -dphi / phi[..., None]
        BB = 0.25 * np.einsum("xysab,xybc,xytcd,xyda->xyst",
                              dgO, gOinv, dgO, gOinv)
        ric_hh = (K[..., None, None] * sig.mat
                  - hess_phi / phi[..., None, None]
                  + np.einsum("xys,xyt->xyst", Hcov, Hcov) - BB)

        vert = -lap_phi / phi
        horiz = 2 * K - lap_phi / phi + ff.normH2 - ff.normB2
        scal = 2 * K - 2 * lap_phi / phi + ff.normH2 - ff.normB2
    return {"ric_vv": ric_vv, "ric_hh": ric_hh, "vertical_trace": vert,
            "horizontal_trace": horiz, "scal": scal}


# ---------------------------------------------------------------------------
# Mixed Ricci components from the connection field
# ---------------------------------------------------------------------------


def bracket_vertical(data: InvariantMetricData) -> np.ndarray:
    """<[X, Y], V_j> fields, j = 1, 2, from the curl of the connection."""
    grid, C = data.grid, data.C
    beta = np.stack([grid.d_x(C[..., 1, 0]) - grid.d_y(C[..., 0, 0]),
                     grid.d_x(C[..., 1, 1]) - grid.d_y(C[..., 0, 1])], axis=-1)
    return np.einsum("xyl,xylj->xyj", beta, data.g_omega)


def mixed_ricci_from_bracket(mu2: np.ndarray, g_omega: np.ndarray,
                             k: np.ndarray, grid: Grid) -> dict:
    """Divergence-form mixed Ricci components given the vertical bracket
    inner products k_j = <[X, Y], V_j>.

    With F_j = (sqrt(det g_O)/mu) k_j:
        Ric(Y, V_j) =  mu/(2 sqrt(det g_O)) * d_x F_j
        Ric(X, V_j) = -1/(2 mu sqrt(det g_O)) * d_y F_j
    """
    mu = np.sqrt(mu2)
    root = orbit_volume(g_omega)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = (root / mu)[..., None] * k
        ric_Y = 0.5 * (mu / root)[..., None] * np.stack(
            [grid.d_x(F[..., 0]), grid.d_x(F[..., 1])], axis=-1)
        ric_X = -0.5 / (mu * root)[..., None] * np.stack(
            [grid.d_y(F[..., 0]), grid.d_y(F[..., 1])], axis=-1)
    return {"ric_XV": ric_X, "ric_YV": ric_Y}


def mixed_ricci_defect(data: InvariantMetricData) -> dict:
    """Mixed Ricci fields Ric(X, V_j), Ric(Y, V_j) of an invariant metric.

    Requires the gauge quotient form dx^2 + mu^2 dy^2 (the formula path is
    derived in that chart).  Identically zero when C = 0.
    """
    if not data.q.is_gauge:
        raise ValueError("mixed Ricci formulas need the gauge quotient form")
    k = bracket_vertical(data)
    return mixed_ricci_from_bracket(data.q.mu2, data.g_omega, k, data.grid)


# ---------------------------------------------------------------------------
# Diagonal metrics: curvature data, operator blocks, isotropic positivity
# ---------------------------------------------------------------------------


@dataclass
class DiagonalCurvature:
    """Curvature data (s, p, A, B) of a diagonal metric in an orthonormal
    quotient frame: s the quotient sectional curvature,
    p = -<grad a, grad b>/(ab), A = -Hess(a)/a, B = -Hess(b)/b."""

    s: np.ndarray
    p: np.ndarray
    A: np.ndarray
    B: np.ndarray


def diagonal_curvature(data: DiagonalMetricData) -> DiagonalCurvature:
    if np.any(data.a[data.grid.interior_slice()] <= 0) or \
       np.any(data.b[data.grid.interior_slice()] <= 0):
        raise ValueError("warp fields must be positive at interior nodes")
    sig = SigmaGeometry(data.grid, data.q)
    E = sig.orthonormal_frame()
    with np.errstate(divide="ignore", invalid="ignore"):
        p = -sig.inner_grad(data.a, data.b) / (data.a * data.b)
        A = -np.einsum("xysa,xyst,xytb->xyab", E, sig.hessian(data.a), E) \
            / data.a[..., None, None]
        B = -np.einsum("xysa,xyst,xytb->xyab", E, sig.hessian(data.b), E) \
            / data.b[..., None, None]
    return DiagonalCurvature(s=sig.gauss_curvature, p=p, A=A, B=B)


def curvature_operator_full(dc: DiagonalCurvature, node) -> np.ndarray:
    """6x6 curvature operator at a node in the split bivector basis

    { (XY+VW)/sqrt2, (XV-YW)/sqrt2, (XW+YV)/sqrt2,
      (XY-VW)/sqrt2, (XV+YW)/sqrt2, (XW-YV)/sqrt2 }

    built from the diagonal curvature data."""
    i, j = node
    s, p = float(dc.s[i, j]), float(dc.p[i, j])
    A, B = dc.A[i, j], dc.B[i, j]
    a11, a12, a22 = A[0, 0], A[0, 1], A[1, 1]
    b11, b12, b22 = B[0, 0], B[0, 1], B[1, 1]
    M = np.array([
        [(s + p) / 2, 0, 0, (s - p) / 2, 0, 0],
        [0, (a11 + b22) / 2, (a12 - b12) / 2, 0, (a11 - b22) / 2, (a12 + b12) / 2],
        [0, (a12 - b12) / 2, (a22 + b11) / 2, 0, (a12 + b12) / 2, (b11 - a22) / 2],
        [(s - p) / 2, 0, 0, (s + p) / 2, 0, 0],
        [0, (a11 - b22) / 2, (a12 + b12) / 2, 0, (a11 + b22) / 2, (a12 - b12) / 2],
        [0, (a12 + b12) / 2, (b11 - a22) / 2, 0, (a12 - b12) / 2, (b11 + a22) / 2],
    ])
    return M


def curvature_operator_blocks(dc: DiagonalCurvature, node):
    """The two 3x3 blocks of the curvature operator whose smallest two
    eigenvalues control isotropic-curvature positivity."""
    M = curvature_operator_full(dc, node)
    return M[:3, :3].copy(), M[3:, 3:].copy()


_SPLIT_BASIS = None


def _split_basis() -> np.ndarray:
    """Rows: the six bivector-basis vectors over pair order
    [XY, XV, XW, YV, YW, VW]."""
    global _SPLIT_BASIS
    if _SPLIT_BASIS is None:
        r = 1.0 / np.sqrt(2.0)
        B = np.zeros((6, 6))
        B[0, 0], B[0, 5] = r, r
        B[1, 1], B[1, 4] = r, -r
        B[2, 2], B[2, 3] = r, r
        B[3, 0], B[3, 5] = r, -r
        B[4, 1], B[4, 4] = r, r
        B[5, 2], B[5, 3] = r, -r
        _SPLIT_BASIS = B
    return _SPLIT_BASIS


def engine_curvature_operator(data: DiagonalMetricData, node,
                              stride: int = 1) -> np.ndarray:
    """Coordinate-engine 6x6 curvature operator in the same split basis,
    for oracle comparison with `curvature_operator_full`."""
    inv = data.to_invariant()
    eng = CurvatureEngine.for_data(inv)
    riem = eng.riemann_at(node, stride)
    i, j = node
    sig = SigmaGeometry(data.grid, data.q)
    E2 = sig.orthonormal_frame()[i, j]
    E = np.zeros((4, 4))
    E[:2, :2] = E2
    E[2, 2] = 1.0 / data.a[i, j]
    E[3, 3] = 1.0 / data.b[i, j]
    R = np.einsum("abcd,ax,by,cz,dw->xyzw", riem, E, E, E, E)
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    Op = np.array([[R[a, b, c, d] for (c, d) in pairs] for (a, b) in pairs])
    Bas = _split_basis()
    return Bas @ Op @ Bas.T


def nonneg_isotropic_check(m_plus: np.ndarray, m_minus: np.ndarray,
                           tol: float = 1e-10):
    """Sum of the two smallest eigenvalues of each block; nonnegative
    (within tol) exactly when the isotropic curvature is nonnegative."""
    m_plus = np.asarray(m_plus, dtype=float)
    m_minus = np.asarray(m_minus, dtype=float)
    for m in (m_plus, m_minus):
        if not np.allclose(m, np.swapaxes(m, -1, -2), atol=1e-12 * (1 + np.abs(m).max())):
            raise ValueError("curvature operator blocks must be symmetric")
    ev_p = np.linalg.eigvalsh(m_plus)
    ev_m = np.linalg.eigvalsh(m_minus)
    sum_p = ev_p[..., 0] + ev_p[..., 1]
    sum_m = ev_m[..., 0] + ev_m[..., 1]
    ok = bool(np.all(sum_p >= -tol) and np.all(sum_m >= -tol))
    return ok, sum_p, sum_m


# ---------------------------------------------------------------------------
# Boundary expansion along an edge
# ---------------------------------------------------------------------------


class EdgeExpansion:
    """Second-order expansion data of an invariant metric along one edge.

    In edge Fermi coordinates (r = distance to the stratum, t = arclength
    along it) the fields behave as

        a^2 = r^2 + a0(t) r^4 + ...      (collapsing orbit length^2)
        b   = b0(t) r^2 + ...            (cross term)
        d^2 = d0(t) + d2(t) r^2 + ...    (surviving orbit length^2)
        mu  = 1 - sec(t) r^2 / 2 + ...   (quotient Fermi coefficient)

    Profiles are callables of t on [0, length]; d0 derivative profiles are
    optional and fall back to centered differences.
    """

    def __init__(self, a0, b0, d0, d2, sec, length: float,
                 d0_prime=None, d0_second=None):
        self.a0, self.b0, self.d0, self.d2, self.sec = a0, b0, d0, d2, sec
        self.length = float(length)
        self._d0p = d0_prime
        self._d0pp = d0_second

    def d0_prime(self, t):
        if self._d0p is not None:
            return self._d0p(t)
        h = 1e-5 * max(self.length, 1.0)
        return (np.asarray(self.d0(t + h)) - np.asarray(self.d0(t - h))) / (2 * h)

    def d0_second(self, t):
        if self._d0pp is not None:
            return self._d0pp(t)
        h = 1e-4 * max(self.length, 1.0)
        return (np.asarray(self.d0(t + h)) - 2 * np.asarray(self.d0(t))
                + np.asarray(self.d0(t - h))) / h**2


def boundary_ricci_expansion(e: EdgeExpansion, t):
    """Normalized diagonal Ricci components on the edge (r = 0).

    Returns (Ric_rr, Ric_tt, Ric_phiphi, Ric_thetatheta) where each entry
    is the r -> 0 limit of the Ricci component divided by the matching
    metric component.  All off-diagonal components vanish in this limit.
    For Einstein data all four equal the Einstein constant.
    """
    t = np.asarray(t, dtype=float)
    d0 = np.asarray(e.d0(t), dtype=float)
    if np.any(d0 <= 0):
        raise ValueError("d0 must be positive away from the edge endpoints")
    a0 = np.asarray(e.a0(t), dtype=float)
    b0 = np.asarray(e.b0(t), dtype=float)
    d2 = np.asarray(e.d2(t), dtype=float)
    sec = np.asarray(e.sec(t), dtype=float)
    d0p = np.asarray(e.d0_prime(t), dtype=float)
    d0pp = np.asarray(e.d0_second(t), dtype=float)

    slack = (d2 - b0**2) / d0
    profile_tt = -d0pp / (2 * d0) + d0p**2 / (4 * d0**2)
    ric_rr = -3 * a0 - slack + sec
    ric_tt = profile_tt + 2 * sec
    ric_pp = -3 * a0 - slack + sec
    ric_qq = profile_tt - 2 * slack
    return ric_rr, ric_tt, ric_pp, ric_qq
