"""Torus-invariant metric data reduced to fields on the orbit space.

A T^2-invariant metric on the 4-manifold is encoded by three 2x2 fields
over the orbit space: the quotient metric g_S, the orbit metric
g_O = [[a^2, b], [b, d^2]] measuring the Killing fields, and a connection
field C recording the failure of the coordinate lifts to be horizontal.
In the coordinate basis {dx, dy, dphi, dtheta} the 4-metric is the block
matrix

    [ g_S + C g_O C^T   -C g_O ]
    [   -g_O C^T          g_O  ]

C identically zero is the geometrically polar case; additionally
diagonal g_O with positive entries a^2, b^2 is the diagonal case, for
which `DiagonalMetricData` stores the warp fields a, b directly.
"""

from __future__ import annotations

import numpy as np

from .orbit_space import (Grid, OrbitSpace, Slope, build_grid, periodic_torus,
                          rectangle)

GAUGE = "gauge"
GENERAL = "general"


def sym2(g11, g12, g22) -> np.ndarray:
    """Stack entry fields into a symmetric (nx, ny, 2, 2) matrix field."""
    g11, g12, g22 = np.broadcast_arrays(np.asarray(g11, float),
                                        np.asarray(g12, float),
                                        np.asarray(g22, float))
    out = np.empty(g11.shape + (2, 2))
    out[..., 0, 0] = g11
    out[..., 0, 1] = g12
    out[..., 1, 0] = g12
    out[..., 1, 1] = g22
    return out


def det2(m: np.ndarray) -> np.ndarray:
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def inv2(m: np.ndarray, det=None) -> np.ndarray:
    d = det2(m) if det is None else det
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 1, 1] = m[..., 0, 0]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    return out / d[..., None, None]


class QuotientMetric:
    """Metric on the orbit space: gauge form dx^2 + mu^2 dy^2 or a general
    symmetric positive-definite 2x2 field."""

    def __init__(self, kind: str, *, mu2=None, mat=None):
        if kind not in (GAUGE, GENERAL):
            raise ValueError(f"unknown quotient metric kind {kind!r}")
        self.kind = kind
        if kind == GAUGE:
            # mu^2 may vanish on degenerate rectangle sides (bigon vertices)
            # but never go negative.
            self.mu2 = np.asarray(mu2, dtype=float)
            if np.any(self.mu2 < 0):
                raise ValueError("gauge coefficient mu^2 must be nonnegative")
        else:
            self.mat_field = np.asarray(mat, dtype=float)

    @staticmethod
    def flat(grid: Grid) -> "QuotientMetric":
        return QuotientMetric(GAUGE, mu2=np.ones(grid.shape))

    @staticmethod
    def gauge(mu2) -> "QuotientMetric":
        return QuotientMetric(GAUGE, mu2=mu2)

    @staticmethod
    def general(g11, g12, g22) -> "QuotientMetric":
        return QuotientMetric(GENERAL, mat=sym2(g11, g12, g22))

    @property
    def is_gauge(self) -> bool:
        return self.kind == GAUGE

    def matrix(self) -> np.ndarray:
        if self.kind == GAUGE:
            one = np.ones_like(self.mu2)
            return sym2(one, np.zeros_like(self.mu2), self.mu2)
        return self.mat_field

    def det(self) -> np.ndarray:
        if self.kind == GAUGE:
            return self.mu2
        return det2(self.mat_field)

    def inv(self) -> np.ndarray:
        if self.kind == GAUGE:
            one = np.ones_like(self.mu2)
            return sym2(one, np.zeros_like(self.mu2), 1.0 / self.mu2)
        return inv2(self.mat_field)


class InvariantMetricData:
    """Full invariant metric: orbit space, quotient metric, orbit metric,
    connection field.  All fields share one grid and are treated as
    immutable after construction."""

    def __init__(self, space: OrbitSpace, grid: Grid, q: QuotientMetric,
                 g_omega: np.ndarray, C: np.ndarray | None = None,
                 einstein_constant: float | None = None, name: str = ""):
        self.space = space
        self.grid = grid
        self.q = q
        self.g_omega = np.asarray(g_omega, dtype=float)
        if self.g_omega.shape != grid.shape + (2, 2):
            raise ValueError("orbit metric field has wrong shape")
        if C is None:
            C = np.zeros(grid.shape + (2, 2))
        self.C = np.asarray(C, dtype=float)
        if self.C.shape != grid.shape + (2, 2):
            raise ValueError("connection field has wrong shape")
        self.einstein_constant = einstein_constant
        self.name = name

    @property
    def is_polar(self) -> bool:
        return not np.any(self.C)

    def with_zero_connection(self) -> "InvariantMetricData":
        return InvariantMetricData(self.space, self.grid, self.q,
                                   self.g_omega, None,
                                   self.einstein_constant, self.name)

    def full_metric_field(self) -> np.ndarray:
        """The 4x4 block metric at every node, shape (nx, ny, 4, 4)."""
        gS = self.q.matrix()
        gO = self.g_omega
        C = self.C
        CgO = C @ gO
        G = np.zeros(self.grid.shape + (4, 4))
        G[..., :2, :2] = gS + CgO @ np.swapaxes(C, -1, -2)
        G[..., :2, 2:] = -CgO
        G[..., 2:, :2] = -np.swapaxes(CgO, -1, -2)
        G[..., 2:, 2:] = gO
        return G

    def swap_killing_fields(self) -> "InvariantMetricData":
        """Relabel V_1 <-> V_2 (swap orbit coordinates)."""
        P = np.array([[0.0, 1.0], [1.0, 0.0]])
        gO = P @ self.g_omega @ P
        C = self.C @ P
        return InvariantMetricData(self.space, self.grid, self.q, gO, C,
                                   self.einstein_constant, self.name)


class DiagonalMetricData:
    """Polar metric with orthogonal Killing fields of lengths a and b."""

    def __init__(self, space: OrbitSpace, grid: Grid, q: QuotientMetric,
                 a: np.ndarray, b: np.ndarray,
                 einstein_constant: float | None = None, name: str = ""):
        self.space = space
        self.grid = grid
        self.q = q
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        if self.a.shape != grid.shape or self.b.shape != grid.shape:
            raise ValueError("warp fields have wrong shape")
        self.einstein_constant = einstein_constant
        self.name = name

    def to_invariant(self) -> InvariantMetricData:
        zeros = np.zeros(self.grid.shape)
        gO = sym2(self.a**2, zeros, self.b**2)
        return InvariantMetricData(self.space, self.grid, self.q, gO, None,
                                   self.einstein_constant, self.name)

    def full_metric_field(self) -> np.ndarray:
        return self.to_invariant().full_metric_field()


def assemble_full_metric(data, node: tuple[int, int]) -> np.ndarray:
    """4x4 metric matrix at one node in basis {d/dx, d/dy, d/dphi, d/dtheta}."""
    if isinstance(data, DiagonalMetricData):
        data = data.to_invariant()
    i, j = node
    gS = data.q.matrix()[i, j]
    gO = data.g_omega[i, j]
    C = data.C[i, j]
    G = np.zeros((4, 4))
    G[:2, :2] = gS + C @ gO @ C.T
    G[:2, 2:] = -C @ gO
    G[2:, :2] = G[:2, 2:].T
    G[2:, 2:] = gO
    if not data.grid.boundary_mask()[i, j]:
        if np.linalg.det(gO) <= 0:
            raise ValueError(f"orbit metric not positive definite at interior node {node}")
    return G


def orbit_volume(g_omega: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """sqrt(det g_O): the orbit-volume density over the orbit space.

    Tiny negative determinants from round-off are clamped to zero;
    anything further negative signals corrupt field data.
    """
    d = det2(np.asarray(g_omega, dtype=float))
    scale = max(float(np.abs(g_omega).max()) ** 2, 1.0)
    if np.any(d < -tol * scale):
        raise ValueError("orbit metric has negative determinant")
    return np.sqrt(np.clip(d, 0.0, None))


# ---------------------------------------------------------------------------
# Builtin metric library
# ---------------------------------------------------------------------------

def _smooth_periodic(rng: np.random.Generator, grid: Grid, nmodes: int = 2) -> np.ndarray:
    """Random trig polynomial on the torus, normalized to sup <= 1."""
    kx = 2 * np.pi / grid.domain.lx
    ky = 2 * np.pi / grid.domain.ly
    f = np.zeros(grid.shape)
    coeffs = rng.normal(size=(nmodes + 1, nmodes + 1, 4))
    for m in range(nmodes + 1):
        for n in range(nmodes + 1):
            if m == 0 and n == 0:
                continue
            cx, sx = np.cos(m * kx * grid.X), np.sin(m * kx * grid.X)
            cy, sy = np.cos(n * ky * grid.Y), np.sin(n * ky * grid.Y)
            c = coeffs[m, n]
            f += c[0] * cx * cy + c[1] * cx * sy + c[2] * sx * cy + c[3] * sx * sy
    sup = np.abs(f).max()
    return f / sup if sup > 0 else f


def round_s4(resolution=129) -> DiagonalMetricData:
    """Unit round 4-sphere reduced by the standard torus rotation.

    Orbit space: the lune chart (u, v) in [0, pi] x [0, pi/2] with metric
    du^2 + sin^2(u) dv^2; warp fields a = sin u cos v, b = sin u sin v.
    Einstein with constant 3.  The u = 0, pi sides are the bigon vertices.
    """
    space = OrbitSpace(rectangle(np.pi, np.pi / 2),
                       (Slope(0, 1), Slope(1, 0)))
    grid = build_grid(space, resolution)
    q = QuotientMetric.gauge(np.sin(grid.X) ** 2)
    a = np.sin(grid.X) * np.cos(grid.Y)
    b = np.sin(grid.X) * np.sin(grid.Y)
    return DiagonalMetricData(space, grid, q, a, b, 3.0, "round_s4")


def product_spheres(resolution=129) -> DiagonalMetricData:
    """Product of two unit 2-spheres: flat square orbit space, a = sin x,
    b = sin y.  Einstein with constant 1."""
    space = OrbitSpace(rectangle(np.pi, np.pi),
                       (Slope(0, 1), Slope(1, 0), Slope(0, 1), Slope(1, 0)))
    grid = build_grid(space, resolution)
    q = QuotientMetric.flat(grid)
    return DiagonalMetricData(space, grid, q, np.sin(grid.X), np.sin(grid.Y),
                              1.0, "product_spheres")


def square_family(p: int, resolution=129) -> InvariantMetricData:
    """The unique solution family of the reduced equations on the flat
    square with edge labels [(0,1), (1,0), (p,1), (1,0)]:

        g11 = sin^2 x
        g22 = (p^2/2) sin^2 x (1 - cos y) + sin^2 y
        g12 = (p/2) sin^2 x (1 - cos y)

    Einstein (the two-sphere product) exactly when p = 0.
    """
    space = OrbitSpace(rectangle(np.pi, np.pi),
                       (Slope(0, 1), Slope(1, 0), Slope(p, 1), Slope(1, 0)))
    grid = build_grid(space, resolution)
    q = QuotientMetric.flat(grid)
    sx2 = np.sin(grid.X) ** 2
    omc = 1.0 - np.cos(grid.Y)
    g11 = sx2
    g22 = 0.5 * p * p * sx2 * omc + np.sin(grid.Y) ** 2
    g12 = 0.5 * p * sx2 * omc
    lam = 1.0 if p == 0 else None
    return InvariantMetricData(space, grid, q, sym2(g11, g12, g22), None,
                               lam, f"square_family({p})")


def periodic_random(seed: int, amplitude: float, resolution=48,
                    polar: bool = False, diagonal: bool = False,
                    general_base: bool = False) -> InvariantMetricData:
    """Smooth random fields on the flat torus [0, 2pi)^2.

    The quotient metric is the gauge form with mu^2 = 1 + amplitude*f (or a
    general SPD field when general_base is set); the orbit metric is the
    identity plus an amplitude-bounded symmetric field, so its eigenvalues
    stay clamped away from zero; C gets independent amplitude-size entries
    unless polar is set.
    """
    if not 0 <= amplitude < 0.9:
        raise ValueError("amplitude must lie in [0, 0.9)")
    rng = np.random.default_rng(seed)
    space = OrbitSpace(periodic_torus(2 * np.pi, 2 * np.pi))
    grid = build_grid(space, resolution)

    def f():
        return amplitude * _smooth_periodic(rng, grid)

    if general_base:
        s11, s12, s22 = f(), 0.5 * f(), f()
        q = QuotientMetric.general(1.0 + s11, s12, 1.0 + s22)
    else:
        q = QuotientMetric.gauge(1.0 + f())
    w11, w12, w22 = f(), 0.5 * f(), f()
    if diagonal:
        w12 = np.zeros(grid.shape)
    gO = sym2(1.0 + w11, w12, 1.0 + w22)
    C = np.zeros(grid.shape + (2, 2))
    if not polar:
        for i in range(2):
            for j in range(2):
                C[..., i, j] = f()
    return InvariantMetricData(space, grid, q, gO, C, None,
                               f"periodic_random({seed},{amplitude})")


def flat_torus(resolution=48, size=2 * np.pi) -> InvariantMetricData:
    """Flat product torus: all fields constant, curvature identically zero."""
    space = OrbitSpace(periodic_torus(size, size))
    grid = build_grid(space, resolution)
    q = QuotientMetric.flat(grid)
    gO = sym2(np.ones(grid.shape), np.zeros(grid.shape), np.ones(grid.shape))
    return InvariantMetricData(space, grid, q, gO, None, None, "flat_torus")


def perturbed(base: str, seed: int, eps: float, resolution=48,
              torus_mode: bool = True, **base_params) -> InvariantMetricData:
    """Base metric plus eps-amplitude smooth perturbations of every field.

    In torus mode a rectangle base is replaced by a positivity-padded
    periodic stand-in (collapsing orbits are not representable without
    boundary): for 'product_spheres' the pad is
    g_O = diag(1 + sin^2 x, 1 + sin^2 y) on [0, 2pi)^2.  The perturbation
    touches mu^2, all g_O entries, and all C entries, so the result is
    generically neither polar nor diagonal.
    """
    if torus_mode:
        if base in ("product_spheres", "flat_torus"):
            space = OrbitSpace(periodic_torus(2 * np.pi, 2 * np.pi))
            grid = build_grid(space, resolution)
            q = QuotientMetric.flat(grid)
            if base == "product_spheres":
                gO = sym2(1.0 + np.sin(grid.X) ** 2, np.zeros(grid.shape),
                          1.0 + np.sin(grid.Y) ** 2)
            else:
                gO = sym2(np.ones(grid.shape), np.zeros(grid.shape),
                          np.ones(grid.shape))
            data = InvariantMetricData(space, grid, q, gO, None)
        elif base == "periodic_random":
            data = periodic_random(seed + 1, 0.2, resolution, **base_params)
        else:
            raise ValueError(f"no torus-mode stand-in for base {base!r}")
    else:
        data = builtin_metric(base, resolution, **base_params)
        if isinstance(data, DiagonalMetricData):
            data = data.to_invariant()
    rng = np.random.default_rng(seed)
    grid = data.grid

    def f():
        return eps * _smooth_periodic(rng, grid)

    if data.q.is_gauge:
        q = QuotientMetric.gauge(data.q.mu2 + f())
    else:
        m = data.q.mat_field
        q = QuotientMetric.general(m[..., 0, 0] + f(), m[..., 0, 1] + 0.5 * f(),
                                   m[..., 1, 1] + f())
    gO = data.g_omega + sym2(f(), 0.5 * f(), f())
    C = data.C.copy()
    for i in range(2):
        for j in range(2):
            C[..., i, j] = C[..., i, j] + f()
    return InvariantMetricData(data.space, grid, q, gO, C, None,
                               f"perturbed({base},{seed},{eps})")


_BUILTINS = {
    "round_s4": round_s4,
    "product_spheres": product_spheres,
    "square_family": square_family,
    "periodic_random": periodic_random,
    "perturbed": perturbed,
    "flat_torus": flat_torus,
}


def builtin_metric(name: str, resolution=129, **params):
    """Construct a builtin metric by name.

    Names: round_s4, product_spheres, square_family (param p),
    periodic_random (params seed, amplitude), perturbed (params base, seed,
    eps), flat_torus.
    """
    if name not in _BUILTINS:
        raise ValueError(f"unknown builtin metric {name!r}; "
                         f"choose from {sorted(_BUILTINS)}")
    if name == "square_family":
        p = int(params.pop("p"))
        return square_family(p, resolution, **params)
    if name == "periodic_random":
        seed = int(params.pop("seed"))
        amplitude = float(params.pop("amplitude"))
        return periodic_random(seed, amplitude, resolution, **params)
    if name == "perturbed":
        base = params.pop("base")
        seed = int(params.pop("seed"))
        eps = float(params.pop("eps"))
        return perturbed(base, seed, eps, resolution, **params)
    return _BUILTINS[name](resolution, **params)
