"""Regions of the plane and divisors (finite zero/pole multisets)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = ["Region", "DivisorPoint", "Divisor", "merge_signed_points"]


@dataclass(frozen=True)
class Region:
    """A disc, annulus or axis-aligned rectangle.

    shape "disc":      params (center, radius)
    shape "annulus":   params (center, r_in, r_out)
    shape "rectangle": params (corner_lo, corner_hi), lo strictly below-left
    """

    shape: str
    params: tuple

    @staticmethod
    def disc(center: complex, radius: float) -> "Region":
        if radius <= 0:
            raise ValueError("disc radius must be positive")
        return Region("disc", (complex(center), float(radius)))

    @staticmethod
    def annulus(center: complex, r_in: float, r_out: float) -> "Region":
        if not 0 < r_in < r_out:
            raise ValueError("annulus requires 0 < r_in < r_out")
        return Region("annulus", (complex(center), float(r_in), float(r_out)))

    @staticmethod
    def rectangle(corner_lo: complex, corner_hi: complex) -> "Region":
        if not (corner_lo.real < corner_hi.real and corner_lo.imag < corner_hi.imag):
            raise ValueError("rectangle corners must satisfy lo < hi componentwise")
        return Region("rectangle", (complex(corner_lo), complex(corner_hi)))

    def contains(self, z: complex) -> bool:
        if self.shape == "disc":
            c, r = self.params
            return abs(z - c) < r
        if self.shape == "annulus":
            c, r_in, r_out = self.params
            return r_in < abs(z - c) < r_out
        lo, hi = self.params
        return lo.real < z.real < hi.real and lo.imag < z.imag < hi.imag

    def bounding_disc(self) -> tuple[complex, float]:
        if self.shape == "disc":
            return self.params
        if self.shape == "annulus":
            c, _, r_out = self.params
            return c, r_out
        lo, hi = self.params
        c = 0.5 * (lo + hi)
        return c, abs(hi - c)


@dataclass(frozen=True)
class DivisorPoint:
    location: complex
    multiplicity: int
    kind: str  # "zero" | "pole"

    def __post_init__(self):
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")
        if self.kind not in ("zero", "pole"):
            raise ValueError(f"kind must be zero|pole, got {self.kind!r}")

    @property
    def signed_order(self) -> int:
        return self.multiplicity if self.kind == "zero" else -self.multiplicity


def _sort_key(p: DivisorPoint):
    return (p.location.real, p.location.imag, p.kind)


@dataclass
class Divisor:
    """A finite multiset of zeros and poles inside a region."""

    points: list[DivisorPoint]
    region: Region
    certified: bool = True
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.points = sorted(self.points, key=_sort_key)
        seen = {}
        for p in self.points:
            key = (p.location.real, p.location.imag)
            if key in seen:
                raise ValueError(f"duplicate divisor location {p.location}")
            seen[key] = p

    def zeros(self) -> list[DivisorPoint]:
        return [p for p in self.points if p.kind == "zero"]

    def poles(self) -> list[DivisorPoint]:
        return [p for p in self.points if p.kind == "pole"]

    def of_kind(self, kind: str) -> list[DivisorPoint]:
        return [p for p in self.points if p.kind == kind]

    def restrict(self, radius: float, center: complex = 0j) -> "Divisor":
        """Sub-divisor of points with |z - center| < radius."""
        pts = [p for p in self.points if abs(p.location - center) < radius]
        return Divisor(pts, Region.disc(center, radius), self.certified, dict(self.meta))

    def swap_kinds(self) -> "Divisor":
        pts = [
            DivisorPoint(p.location, p.multiplicity, "pole" if p.kind == "zero" else "zero")
            for p in self.points
        ]
        return Divisor(pts, self.region, self.certified, dict(self.meta))

    def moduli(self) -> list[float]:
        return [abs(p.location) for p in self.points]

    def total_signed_order(self) -> int:
        return sum(p.signed_order for p in self.points)


def merge_signed_points(
    groups: list[tuple[int, list[DivisorPoint]]],
    region: Region,
    certified: bool,
    tol: float = 1e-9,
) -> Divisor:
    """Combine divisors by summing signed orders, cancelling where they meet.

    ``groups`` pairs an integer weight with a point list; a weight of -1
    flips kinds (used for quotients).  Points closer than ``tol`` are
    treated as one location.
    """
    acc: list[list] = []  # [location, signed_order]
    for weight, pts in groups:
        for p in pts:
            signed = weight * p.signed_order
            for slot in acc:
                if abs(slot[0] - p.location) < tol:
                    slot[1] += signed
                    break
            else:
                acc.append([p.location, signed])
    out = []
    for loc, signed in acc:
        if signed > 0:
            out.append(DivisorPoint(loc, signed, "zero"))
        elif signed < 0:
            out.append(DivisorPoint(loc, -signed, "pole"))
    return Divisor(out, region, certified)


def min_gap_to_circle(moduli, radius: float) -> float:
    """Smallest distance from the circle |z| = radius to the given moduli."""
    if not moduli:
        return math.inf
    return min(abs(m - radius) for m in moduli)
