"""Benchmark problem definitions: exact solutions, data, and coefficients.

Each case packages the domain, the interface level set with its subdomain
labeling, the piecewise-constant conductivity, and vectorized per-side
evaluators for the exact potential, its gradient, and the source.  Boundary
and interface data (g, g_D, g_N) are derived from the two branches with the
jump convention [[w]] = w|_1 - w|_2 and the interface normal pointing from
subdomain 1 into subdomain 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import (AnalyticLevelSet, CircleLevelSet, DiamondLevelSet,
                       HorizontalLineLevelSet, LevelSet, interface_normal)

__all__ = [
    "ProblemCase",
    "example_circle_homogeneous",
    "example_circle_nonhomogeneous",
    "example_segment",
    "example_polygon",
    "manufactured_uncut",
    "patch_polynomial",
    "case_by_name",
    "CASE_NAMES",
]


@dataclass(frozen=True)
class ProblemCase:
    """Elliptic interface problem with a known exact solution.

    ``u``, ``grad_u`` and ``f`` take a subdomain index (1 or 2) and an
    (n, 2) point array.  ``alpha`` stores (alpha_1, alpha_2).
    """

    name: str
    domain: tuple[float, float, float, float]
    levelset: LevelSet
    alpha: tuple[float, float]
    u: Callable
    grad_u: Callable
    f: Callable

    def alpha_of(self, side: int) -> float:
        return self.alpha[side - 1]

    def q(self, side: int, pts: np.ndarray) -> np.ndarray:
        return self.alpha_of(side) * self.grad_u(side, pts)

    def g(self, pts: np.ndarray) -> np.ndarray:
        """Dirichlet boundary values, branch-selected by the level set."""
        pts = np.atleast_2d(pts)
        sides = self.levelset.side_at(pts)
        out = np.empty(len(pts))
        for s in (1, 2):
            mask = sides == s
            if mask.any():
                out[mask] = self.u(s, pts[mask])
        return out

    def g_D(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return self.u(1, pts) - self.u(2, pts)

    def g_N(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        n = interface_normal(self.levelset, pts)
        dq = self.q(1, pts) - self.q(2, pts)
        return np.einsum("ij,ij->i", dq, n)


# ---------------------------------------------------------------------------
# circular interface, homogeneous jumps
# ---------------------------------------------------------------------------

_CIRCLE_CENTER = (0.5, 0.5)
_CIRCLE_RADIUS = np.sqrt(3.0) / 8.0


def example_circle_homogeneous(alpha1: float, alpha2: float) -> ProblemCase:
    """Circular interface, u = r^5/alpha inside, both jumps zero.

    Subdomain 2 is the disk interior; the flux alpha*grad(u) = 5 r^3 (x - c)
    is continuous across the circle by construction.
    """
    if alpha1 <= 0 or alpha2 <= 0:
        raise ValueError("conductivities must be positive")
    c = np.asarray(_CIRCLE_CENTER)
    r0 = _CIRCLE_RADIUS
    shift = -r0**5 / alpha1 + r0**5 / alpha2

    def radius(pts):
        return np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1])

    def u(side, pts):
        pts = np.atleast_2d(pts)
        r = radius(pts)
        if side == 2:
            return r**5 / alpha2
        return r**5 / alpha1 + shift

    def grad_u(side, pts):
        pts = np.atleast_2d(pts)
        a = alpha2 if side == 2 else alpha1
        r3 = radius(pts) ** 3
        return (5.0 * r3 / a)[:, None] * (pts - c)

    def f(side, pts):
        pts = np.atleast_2d(pts)
        return -25.0 * radius(pts) ** 3

    return ProblemCase(
        name="circle-homog",
        domain=(0.0, 0.0, 1.0, 1.0),
        levelset=CircleLevelSet(c, r0, positive_side=1),
        alpha=(float(alpha1), float(alpha2)),
        u=u, grad_u=grad_u, f=f,
    )


def example_circle_nonhomogeneous() -> ProblemCase:
    """Circular interface with nonzero jumps: exp(x)cos(y) inside,
    sin(pi x) sin(pi y) outside, alpha = (1000, 1)."""
    c = np.asarray(_CIRCLE_CENTER)
    alpha1, alpha2 = 1000.0, 1.0

    def u(side, pts):
        pts = np.atleast_2d(pts)
        if side == 2:
            return np.exp(pts[:, 0]) * np.cos(pts[:, 1])
        return np.sin(np.pi * pts[:, 0]) * np.sin(np.pi * pts[:, 1])

    def grad_u(side, pts):
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0], pts[:, 1]
        if side == 2:
            return np.column_stack([np.exp(x) * np.cos(y), -np.exp(x) * np.sin(y)])
        return np.pi * np.column_stack([np.cos(np.pi * x) * np.sin(np.pi * y),
                                        np.sin(np.pi * x) * np.cos(np.pi * y)])

    def f(side, pts):
        pts = np.atleast_2d(pts)
        if side == 2:
            return np.zeros(len(pts))  # exp(x)cos(y) is harmonic
        return 2.0 * np.pi**2 * alpha1 * np.sin(np.pi * pts[:, 0]) * np.sin(np.pi * pts[:, 1])

    return ProblemCase(
        name="circle-jump",
        domain=(0.0, 0.0, 1.0, 1.0),
        levelset=CircleLevelSet(c, _CIRCLE_RADIUS, positive_side=1),
        alpha=(alpha1, alpha2),
        u=u, grad_u=grad_u, f=f,
    )


# ---------------------------------------------------------------------------
# straight segment interface
# ---------------------------------------------------------------------------

_SEGMENT_OFFSET = 0.2031


def example_segment(alpha1: float, alpha2: float,
                    offset: float = _SEGMENT_OFFSET) -> ProblemCase:
    """Straight interface y = 0.2031; u = 5y^4+1 above and y^4+4 b0^4 below.

    The potential jump across the line is exactly 1.  Subdomain 1 sits above
    the line, so the interface normal points downward.  ``offset`` moves the
    line (robustness sweeps); the exact solution tracks it.
    """
    if alpha1 <= 0 or alpha2 <= 0:
        raise ValueError("conductivities must be positive")
    b0 = float(offset)

    def u(side, pts):
        y = np.atleast_2d(pts)[:, 1]
        if side == 1:
            return 5.0 * y**4 + 1.0
        return y**4 + 4.0 * b0**4

    def grad_u(side, pts):
        y = np.atleast_2d(pts)[:, 1]
        coef = 20.0 if side == 1 else 4.0
        return np.column_stack([np.zeros_like(y), coef * y**3])

    def f(side, pts):
        y = np.atleast_2d(pts)[:, 1]
        if side == 1:
            return -alpha1 * 60.0 * y**2
        return -alpha2 * 12.0 * y**2

    return ProblemCase(
        name="segment",
        domain=(0.0, 0.0, 1.0, 1.0),
        levelset=HorizontalLineLevelSet(b0, positive_side=1),
        alpha=(float(alpha1), float(alpha2)),
        u=u, grad_u=grad_u, f=f,
    )


# ---------------------------------------------------------------------------
# polygonal (diamond) interface
# ---------------------------------------------------------------------------

_DIAMOND_INSET = np.sqrt(3.0) / 4.0


def example_polygon() -> ProblemCase:
    """Square interface rotated 45 degrees on [0,2]^2 with nonzero jumps.

    u = sin(x+y) + x^2 y^2 outside, exp(x+y) inside; alpha = (1000, 1) with
    subdomain 1 outside the diamond.
    """
    alpha1, alpha2 = 1000.0, 1.0

    def u(side, pts):
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0], pts[:, 1]
        if side == 2:
            return np.exp(x + y)
        return np.sin(x + y) + x**2 * y**2

    def grad_u(side, pts):
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0], pts[:, 1]
        if side == 2:
            e = np.exp(x + y)
            return np.column_stack([e, e])
        cos = np.cos(x + y)
        return np.column_stack([cos + 2.0 * x * y**2, cos + 2.0 * x**2 * y])

    def f(side, pts):
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0], pts[:, 1]
        if side == 2:
            return -2.0 * alpha2 * np.exp(x + y)
        return alpha1 * (2.0 * np.sin(x + y) - 2.0 * x**2 - 2.0 * y**2)

    return ProblemCase(
        name="polygon",
        domain=(0.0, 0.0, 2.0, 2.0),
        levelset=DiamondLevelSet((1.0, 1.0), 1.0 - _DIAMOND_INSET, positive_side=1),
        alpha=(alpha1, alpha2),
        u=u, grad_u=grad_u, f=f,
    )


# ---------------------------------------------------------------------------
# verification cases
# ---------------------------------------------------------------------------

def manufactured_uncut(alpha: float = 1.0) -> ProblemCase:
    """No interface: plain HDG reduction with u = sin(pi x) sin(pi y)."""
    def u(side, pts):
        pts = np.atleast_2d(pts)
        return np.sin(np.pi * pts[:, 0]) * np.sin(np.pi * pts[:, 1])

    def grad_u(side, pts):
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0], pts[:, 1]
        return np.pi * np.column_stack([np.cos(np.pi * x) * np.sin(np.pi * y),
                                        np.sin(np.pi * x) * np.cos(np.pi * y)])

    def f(side, pts):
        return 2.0 * np.pi**2 * alpha * u(side, pts)

    levelset = AnalyticLevelSet(lambda p: np.ones(len(p)),
                                lambda p: np.zeros_like(p), positive_side=1)
    return ProblemCase(
        name="manufactured-uncut",
        domain=(0.0, 0.0, 1.0, 1.0),
        levelset=levelset,
        alpha=(float(alpha), float(alpha)),
        u=u, grad_u=grad_u, f=f,
    )


def patch_polynomial(k: int, alpha: float = 2.0, offset: float = 0.4031) -> ProblemCase:
    """Globally polynomial solution of degree k with equal conductivities.

    u = (0.3 + 0.6 x + 0.8 y)^k on both sides of a straight interface, so
    both jumps vanish and the scheme must reproduce (u, q) to round-off.
    """
    a, b, c = 0.6, 0.8, 0.3  # a^2 + b^2 = 1 keeps the Laplacian tidy

    def lin(pts):
        pts = np.atleast_2d(pts)
        return c + a * pts[:, 0] + b * pts[:, 1]

    def u(side, pts):
        return lin(pts) ** k

    def grad_u(side, pts):
        base = k * lin(pts) ** (k - 1)
        return np.column_stack([a * base, b * base])

    def f(side, pts):
        if k < 2:
            return np.zeros(len(np.atleast_2d(pts)))
        return -alpha * k * (k - 1) * lin(pts) ** (k - 2)

    return ProblemCase(
        name=f"patch-p{k}",
        domain=(0.0, 0.0, 1.0, 1.0),
        levelset=HorizontalLineLevelSet(offset, positive_side=1),
        alpha=(float(alpha), float(alpha)),
        u=u, grad_u=grad_u, f=f,
    )


CASE_NAMES = ("circle-homog", "circle-jump", "segment", "polygon", "manufactured-uncut")


def case_by_name(name: str, alpha1: float = 1.0, alpha2: float = 1.0) -> ProblemCase:
    """Instantiate a benchmark case by its CLI identifier."""
    if name == "circle-homog":
        return example_circle_homogeneous(alpha1, alpha2)
    if name == "circle-jump":
        return example_circle_nonhomogeneous()
    if name == "segment":
        return example_segment(alpha1, alpha2)
    if name == "polygon":
        return example_polygon()
    if name == "manufactured-uncut":
        return manufactured_uncut(alpha1)
    raise ValueError(f"unknown case {name!r}; choose one of {CASE_NAMES}")
