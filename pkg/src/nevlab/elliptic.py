"""Jacobi elliptic functions on the complex plane.

Quarter periods come from the arithmetic-geometric mean.  sn, cn and dn
are evaluated through Jacobi theta series after reduction modulo the
period lattice, which keeps the series rapidly convergent at every point
of the plane (poles excepted, where the evaluation correctly blows up).
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "agm",
    "quarter_periods",
    "jacobi_values",
    "lattice_in_disc",
]


def agm(a: float, b: float) -> float:
    """Arithmetic-geometric mean of two positive reals.

    Quadratic convergence reaches double precision within a few dozen
    steps; the hard cap prevents stalling on the last-bit rounding
    oscillation.
    """
    if a <= 0.0 or b <= 0.0:
        raise ValueError("agm requires positive arguments")
    for _ in range(64):
        if abs(a - b) <= 1e-16 * max(a, b):
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def quarter_periods(k: float) -> tuple[float, float]:
    """Return (K, K') for modulus k in (0, 1).

    K(k) = pi / (2 agm(1, k')) with k' = sqrt(1 - k^2); K' = K(k').
    """
    if not 0.0 < k < 1.0:
        raise ValueError(f"modulus k must lie in (0, 1), got {k}")
    kp = math.sqrt(1.0 - k * k)
    big_k = math.pi / (2.0 * agm(1.0, kp))
    big_kp = math.pi / (2.0 * agm(1.0, k))
    return big_k, big_kp


def _theta_term_count(tau: float) -> int:
    # series term n decays like exp(-tau*(n^2 - 1/4)) after lattice
    # reduction; 1e-18 cutoff
    n = int(math.ceil(math.sqrt(42.0 / tau + 0.25))) + 2
    return min(max(n, 4), 256)


def jacobi_values(z, k: float, which: str = "sn"):
    """Evaluate sn, cn or dn at complex points (vectorized).

    Points are reduced modulo the lattice (4K, 2iK') first, so accuracy
    is uniform over the plane.  At poles the result overflows to inf.
    """
    big_k, big_kp = quarter_periods(k)
    tau = math.pi * big_kp / big_k
    q = math.exp(-tau)

    zs = np.asarray(z, dtype=complex)
    scalar = zs.ndim == 0
    zs = np.atleast_1d(zs)

    m = np.round(zs.real / (4.0 * big_k))
    n = np.round(zs.imag / (2.0 * big_kp))
    zred = zs - 4.0 * big_k * m - 2j * big_kp * n
    zeta = (math.pi / (2.0 * big_k)) * zred

    nterms = _theta_term_count(tau)
    ns = np.arange(nterms)
    # theta-constant prefactors
    q_half = q ** ((ns + 0.5) ** 2)
    q_full = q ** (ns[1:] ** 2)
    th2_0 = 2.0 * np.sum(q_half)
    th3_0 = 1.0 + 2.0 * np.sum(q_full)
    th4_0 = 1.0 + 2.0 * np.sum(q_full * (-1.0) ** ns[1:])

    odd = np.outer(2.0 * ns + 1.0, zeta)
    even = np.outer(2.0 * ns[1:], zeta)
    with np.errstate(over="ignore", invalid="ignore"):
        th1 = 2.0 * np.einsum("i,ij->j", q_half * (-1.0) ** ns, np.sin(odd))
        th4 = 1.0 + 2.0 * np.einsum(
            "i,ij->j", q_full * (-1.0) ** ns[1:], np.cos(even)
        )
        if which == "sn":
            vals = (th3_0 / th2_0) * th1 / th4
        elif which == "cn":
            th2 = 2.0 * np.einsum("i,ij->j", q_half, np.cos(odd))
            vals = (th4_0 / th2_0) * th2 / th4
        elif which == "dn":
            th3 = 1.0 + 2.0 * np.einsum("i,ij->j", q_full, np.cos(even))
            vals = (th4_0 / th3_0) * th3 / th4
        else:
            raise ValueError(f"unknown Jacobi function {which!r}")
    return vals[0] if scalar else vals


def lattice_in_disc(
    x_offset: float,
    y_offset: float,
    x_step: float,
    y_step: float,
    radius: float,
    center: complex = 0j,
) -> list[complex]:
    """Points {x_offset + m*x_step + i(y_offset + n*y_step)} with |z - center| < radius.

    Returned in a deterministic (sorted) order.
    """
    pts = []
    cx, cy = center.real, center.imag
    m_lo = math.floor((cx - radius - x_offset) / x_step) - 1
    m_hi = math.ceil((cx + radius - x_offset) / x_step) + 1
    n_lo = math.floor((cy - radius - y_offset) / y_step) - 1
    n_hi = math.ceil((cy + radius - y_offset) / y_step) + 1
    for mm in range(m_lo, m_hi + 1):
        x = x_offset + mm * x_step
        for nn in range(n_lo, n_hi + 1):
            y = y_offset + nn * y_step
            if (x - cx) ** 2 + (y - cy) ** 2 < radius * radius:
                pts.append(complex(x, y))
    pts.sort(key=lambda w: (w.real, w.imag))
    return pts
