"""Two-dimensional orbit spaces of torus actions on 4-manifolds.

The orbit space of an effective T^2 action on a closed simply connected
4-manifold is a polygon whose edges carry integer slope labels (p, q) with
gcd(p, q) = 1: the label names the circle subgroup
S(p,q) = {(e^{ip t}, e^{iq t})} fixing the corresponding stratum.  A labeled
polygon reconstructs a smooth manifold exactly when every pair of adjacent
labels spans the integer lattice, i.e. |det [e_i, e_{i+1}]| = 1.

At desk scale the supported domains are coordinate rectangles (with the
degenerate-rectangle presentation of a bigon) and flat periodic tori, the
latter being a boundary-free "toy mode" for interior identities.  This
module also provides the uniform structured `Grid` together with the
finite-difference calculus that every other module builds on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

RECTANGLE = "rectangle"
TORUS = "periodic_torus"


@dataclass(frozen=True)
class Slope:
    """Primitive integer vector (p, q) labeling a circle subgroup of T^2."""

    p: int
    q: int

    def __post_init__(self):
        if (self.p, self.q) == (0, 0):
            raise ValueError("slope (0, 0) does not name a circle subgroup")
        if math.gcd(abs(self.p), abs(self.q)) != 1:
            raise ValueError(
                f"slope ({self.p}, {self.q}) is not primitive: gcd != 1")

    def normalized(self) -> "Slope":
        """Canonical representative of {(p,q), (-p,-q)}: q > 0, or q = 0 and p > 0."""
        if self.q < 0 or (self.q == 0 and self.p < 0):
            return Slope(-self.p, -self.q)
        return self

    def generator(self) -> np.ndarray:
        return np.array([self.p, self.q], dtype=int)

    def trace_matrix(self) -> np.ndarray:
        """Integer matrix [[q^2, pq], [pq, p^2]].

        Scaled by the squared orbit-length profile d0 it is the boundary
        value of the orbit metric along a stratum with isotropy S(p, q);
        its kernel direction (p, -q) is the collapsing generator.
        """
        p, q = self.p, self.q
        return np.array([[q * q, p * q], [p * q, p * p]], dtype=int)


def vertex_det(a: Slope, b: Slope) -> int:
    """det [a | b] over the integers; admissible vertices have |det| = 1."""
    return a.p * b.q - a.q * b.p


@dataclass(frozen=True)
class ActionClassification:
    kind: str              # "diagonal_bigon" | "hirzebruch" | "other"
    parameter: int | None = None

    def __str__(self):
        if self.kind == "hirzebruch":
            return f"hirzebruch({self.parameter})"
        return self.kind


@dataclass(frozen=True)
class ActionReport:
    admissible: bool
    classification: ActionClassification
    vertex_dets: tuple[int, ...]
    reason: str = ""


def _matches(edges: list[Slope], pattern: list[tuple[int, int]]) -> bool:
    return all((e.p, e.q) == pq for e, pq in zip(edges, pattern))


def classify_edges(edges: list[Slope]) -> ActionClassification:
    norm = [e.normalized() for e in edges]
    n = len(norm)
    for r in range(n):
        rot = norm[r:] + norm[:r]
        if n == 2 and _matches(rot, [(1, 0), (0, 1)]):
            return ActionClassification("diagonal_bigon")
        if n == 4 and _matches(rot[:3], [(1, 0), (0, 1), (1, 0)]) and rot[3].q == 1:
            return ActionClassification("hirzebruch", rot[3].p)
    return ActionClassification("other")


def validate_action(edges: list[Slope]) -> ActionReport:
    """Check a cyclically ordered edge-label list for admissibility.

    Admissible means every label is primitive (enforced by `Slope`) and
    every pair of cyclically adjacent labels has determinant +-1, computed
    in exact integer arithmetic.
    """
    if not edges:
        raise ValueError("empty edge list")
    dets = tuple(vertex_det(edges[i], edges[(i + 1) % len(edges)])
                 for i in range(len(edges)))
    bad = [i for i, d in enumerate(dets) if abs(d) != 1]
    if bad:
        i = bad[0]
        reason = (f"vertex {i}: |det[{edges[i].p},{edges[i].q};"
                  f"{edges[(i + 1) % len(edges)].p},{edges[(i + 1) % len(edges)].q}]|"
                  f" = {abs(dets[i])} != 1")
        return ActionReport(False, ActionClassification("other"), dets, reason)
    return ActionReport(True, classify_edges(edges), dets)


@dataclass(frozen=True)
class Domain:
    kind: str       # RECTANGLE or TORUS
    lx: float
    ly: float

    def __post_init__(self):
        if self.kind not in (RECTANGLE, TORUS):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.lx <= 0 or self.ly <= 0:
            raise ValueError("domain side lengths must be positive")


def rectangle(lx: float, ly: float) -> Domain:
    return Domain(RECTANGLE, float(lx), float(ly))


def periodic_torus(lx: float, ly: float) -> Domain:
    return Domain(TORUS, float(lx), float(ly))


@dataclass(frozen=True)
class OrbitSpace:
    """Domain plus slope labels; edges empty exactly in torus mode.

    For a rectangle the labels are listed counterclockwise starting from
    the y=0 side: [y=0, x=lx, y=ly, x=0].  A bigon is presented as a
    degenerate rectangle whose x = 0 and x = lx sides are vertex points;
    it lists two labels, [y=0, y=ly].
    """

    domain: Domain
    edges: tuple[Slope, ...] = field(default=())
    metric_spec: dict | None = None

    def __post_init__(self):
        if self.domain.kind == TORUS and self.edges:
            raise ValueError("a periodic torus has no boundary edges")
        if self.domain.kind == RECTANGLE and len(self.edges) not in (0, 2, 4):
            raise ValueError("rectangle orbit spaces carry 2 or 4 edge labels")

    def validate(self) -> ActionReport:
        return validate_action(list(self.edges))

    def to_json(self) -> str:
        doc = {
            "domain": {"type": self.domain.kind,
                       "lx": self.domain.lx, "ly": self.domain.ly},
            "edges": [[e.p, e.q] for e in self.edges],
            "metric": self.metric_spec if self.metric_spec is not None else {"type": "flat"},
        }
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "OrbitSpace":
        doc = json.loads(text)
        dom = Domain(doc["domain"]["type"], doc["domain"]["lx"], doc["domain"]["ly"])
        edges = tuple(Slope(int(p), int(q)) for p, q in doc.get("edges", []))
        return OrbitSpace(dom, edges, doc.get("metric"))


class Grid:
    """Uniform structured grid on a rectangle or periodic torus.

    Node (i, j) sits at (x_i, y_j) = (i*hx, j*hy) with 'ij' index order, so
    scalar fields are arrays of shape (nx, ny).  For rectangles
    hx = lx/(nx-1) and the last node lies on the boundary; for tori
    hx = lx/nx and index arithmetic wraps around.

    The derivative helpers implement second-order stencils: centered in
    the interior and one-sided (still second order) on rectangle edges.
    """

    def __init__(self, domain: Domain, nx: int, ny: int):
        if nx < 3 or ny < 3:
            raise ValueError("grid needs at least 3 nodes per axis")
        self.domain = domain
        self.nx = int(nx)
        self.ny = int(ny)
        self.periodic = domain.kind == TORUS
        if self.periodic:
            self.hx = domain.lx / nx
            self.hy = domain.ly / ny
        else:
            self.hx = domain.lx / (nx - 1)
            self.hy = domain.ly / (ny - 1)
        self.x = self.hx * np.arange(nx)
        self.y = self.hy * np.arange(ny)
        self.X, self.Y = np.meshgrid(self.x, self.y, indexing="ij")

    # -- basic queries -------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def boundary_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        if not self.periodic:
            m[0, :] = m[-1, :] = True
            m[:, 0] = m[:, -1] = True
        return m

    def n_boundary_nodes(self) -> int:
        return int(self.boundary_mask().sum())

    def interior_slice(self, margin: int = 1):
        if self.periodic:
            return (slice(None), slice(None))
        return (slice(margin, self.nx - margin), slice(margin, self.ny - margin))

    def margin_nodes(self, frac: float, minimum: int = 1) -> int:
        """Node count of a physical margin covering `frac` of the short side."""
        if self.periodic:
            return 0
        m = int(round(frac * (min(self.nx, self.ny) - 1)))
        return max(minimum, m)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def sample(self, fn) -> np.ndarray:
        return np.asarray(fn(self.X, self.Y), dtype=float) + np.zeros(self.shape)

    # -- finite differences --------------------------------------------
    def _d1(self, f: np.ndarray, axis: int) -> np.ndarray:
        h = self.hx if axis == 0 else self.hy
        if self.periodic:
            return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2 * h)
        out = np.empty_like(f)
        g = np.moveaxis(f, axis, 0)
        o = np.moveaxis(out, axis, 0)
        o[1:-1] = (g[2:] - g[:-2]) / (2 * h)
        o[0] = (-3 * g[0] + 4 * g[1] - g[2]) / (2 * h)
        o[-1] = (3 * g[-1] - 4 * g[-2] + g[-3]) / (2 * h)
        return out

    def _d2(self, f: np.ndarray, axis: int) -> np.ndarray:
        h = self.hx if axis == 0 else self.hy
        if self.periodic:
            return (np.roll(f, -1, axis) - 2 * f + np.roll(f, 1, axis)) / h**2
        out = np.empty_like(f)
        g = np.moveaxis(f, axis, 0)
        o = np.moveaxis(out, axis, 0)
        o[1:-1] = (g[2:] - 2 * g[1:-1] + g[:-2]) / h**2
        o[0] = (2 * g[0] - 5 * g[1] + 4 * g[2] - g[3]) / h**2
        o[-1] = (2 * g[-1] - 5 * g[-2] + 4 * g[-3] - g[-4]) / h**2
        return out

    def d_x(self, f):
        return self._d1(np.asarray(f, dtype=float), 0)

    def d_y(self, f):
        return self._d1(np.asarray(f, dtype=float), 1)

    def d_xx(self, f):
        return self._d2(np.asarray(f, dtype=float), 0)

    def d_yy(self, f):
        return self._d2(np.asarray(f, dtype=float), 1)

    def d_xy(self, f):
        return self._d1(self._d1(np.asarray(f, dtype=float), 1), 0)

    def integrate(self, f) -> float:
        """Trapezoidal integral over the domain (exact Riemann sum on tori)."""
        f = np.asarray(f, dtype=float)
        if self.periodic:
            return float(f.sum() * self.hx * self.hy)
        w = np.ones(self.shape)
        w[0, :] *= 0.5
        w[-1, :] *= 0.5
        w[:, 0] *= 0.5
        w[:, -1] *= 0.5
        return float((w * f).sum() * self.hx * self.hy)

    def coarsen(self) -> "Grid":
        """Grid with every other node (odd node counts only, rectangles)."""
        if self.periodic:
            if self.nx % 2 or self.ny % 2:
                raise ValueError("torus coarsening needs even node counts")
            return Grid(self.domain, self.nx // 2, self.ny // 2)
        if (self.nx - 1) % 2 or (self.ny - 1) % 2:
            raise ValueError("rectangle coarsening needs nx-1, ny-1 even")
        return Grid(self.domain, (self.nx - 1) // 2 + 1, (self.ny - 1) // 2 + 1)


def build_grid(space: OrbitSpace, resolution: tuple[int, int] | int) -> Grid:
    """Uniform grid covering the orbit space domain.

    resolution is (nx, ny) or a single count used for both axes; at least
    3 nodes per axis.
    """
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    nx, ny = resolution
    return Grid(space.domain, nx, ny)
