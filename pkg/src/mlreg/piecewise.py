"""Exact piecewise-polynomial calculus for cutoff construction.

A ``PiecewisePoly`` is zero outside ``[breaks[0], breaks[-1]]`` and on each
piece ``[breaks[i], breaks[i+1]]`` equals a polynomial stored in the local
coordinate ``t = x - breaks[i]`` (ascending powers).  Local coordinates keep
Horner evaluation and Taylor shifts well conditioned even at the degrees
(~80) reached by long convolution chains.

The only convolution ever needed by the cutoff constructions is against a
unit-mass box kernel, which maps piecewise polynomials to piecewise
polynomials exactly: it is a difference of shifted antiderivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MAX_DEGREE = 160
_PASCAL = np.zeros((_MAX_DEGREE + 1, _MAX_DEGREE + 1))
_PASCAL[:, 0] = 1.0
for _k in range(1, _MAX_DEGREE + 1):
    _PASCAL[_k, 1 : _k + 1] = _PASCAL[_k - 1, : _k] + _PASCAL[_k - 1, 1 : _k + 1]


def _taylor_shift(c: np.ndarray, s0: float) -> np.ndarray:
    """Coefficients of p(s0 + t) given those of p(s)."""
    d = len(c) - 1
    if d > _MAX_DEGREE:
        raise ValueError(f"degree {d} exceeds supported maximum {_MAX_DEGREE}")
    if s0 == 0.0:
        return c.copy()
    pw = s0 ** np.arange(d + 1)
    j = np.arange(d + 1)
    kk, jj = np.meshgrid(j, j)
    # mat[jj, kk] = C(kk, jj) * s0^(kk - jj) for kk >= jj
    mat = np.where(kk >= jj, _PASCAL[kk, jj] * pw[np.clip(kk - jj, 0, d)], 0.0)
    return mat @ c


@dataclass
class PiecewisePoly:
    """Compactly supported piecewise polynomial in local-coordinate form."""

    breaks: np.ndarray  # (k+1,) increasing
    coeffs: np.ndarray  # (k, d+1) local ascending coefficients

    def __post_init__(self):
        self.breaks = np.asarray(self.breaks, dtype=float)
        self.coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if len(self.breaks) != len(self.coeffs) + 1:
            raise ValueError("need one more breakpoint than pieces")
        if np.any(np.diff(self.breaks) <= 0):
            raise ValueError("breakpoints must be strictly increasing")

    # -- constructors -------------------------------------------------------

    @classmethod
    def indicator(cls, lo: float, hi: float) -> "PiecewisePoly":
        return cls(np.array([lo, hi]), np.array([[1.0]]))

    @classmethod
    def box(cls, width: float, center: float = 0.0) -> "PiecewisePoly":
        """Unit-mass box kernel of the given width."""
        h = 0.5 * width
        return cls(
            np.array([center - h, center + h]), np.array([[1.0 / width]])
        )

    # -- basic queries -------------------------------------------------------

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def support(self) -> tuple[float, float]:
        return float(self.breaks[0]), float(self.breaks[-1])

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, len(self.coeffs) - 1)
        t = x - self.breaks[idx]
        val = np.zeros_like(x)
        for j in range(self.degree, -1, -1):
            val = val * t + self.coeffs[idx, j]
        inside = (x >= self.breaks[0]) & (x <= self.breaks[-1])
        return np.where(inside, val, 0.0)

    def piece_masses(self) -> np.ndarray:
        d = self.degree
        widths = np.diff(self.breaks)
        powers = widths[:, None] ** np.arange(1, d + 2)[None, :]
        return (self.coeffs / np.arange(1, d + 2)[None, :] * powers).sum(axis=1)

    def mass(self) -> float:
        return float(self.piece_masses().sum())

    # -- calculus ------------------------------------------------------------

    def derivative(self, order: int = 1) -> "PiecewisePoly":
        """Piecewise derivative (taken piece by piece; jumps are ignored)."""
        c = self.coeffs
        for _ in range(order):
            if c.shape[1] == 1:
                c = np.zeros((c.shape[0], 1))
                break
            c = c[:, 1:] * np.arange(1, c.shape[1])[None, :]
        return PiecewisePoly(self.breaks.copy(), c)

    def convolve_box(self, width: float) -> "PiecewisePoly":
        """Convolution with the unit-mass box of the given width (exact)."""
        if width <= 0:
            raise ValueError("box width must be positive")
        h = 0.5 * width
        d = self.degree
        # Local antiderivatives and cumulative masses at the breakpoints.
        anti = np.zeros((len(self.coeffs), d + 2))
        anti[:, 1:] = self.coeffs / np.arange(1, d + 2)[None, :]
        cum = np.concatenate([[0.0], np.cumsum(self.piece_masses())])
        total = cum[-1]

        new_breaks = np.concatenate([self.breaks - h, self.breaks + h])
        new_breaks = np.unique(new_breaks)
        scale = max(abs(new_breaks[0]), abs(new_breaks[-1]), 1e-30)
        keep = np.concatenate([[True], np.diff(new_breaks) > 1e-13 * scale])
        new_breaks = new_breaks[keep]

        def cumulative_poly(y_lo: float, y_hi: float, deg_out: int) -> np.ndarray:
            """F(y) on [y_lo, y_hi] as a polynomial in t = y - y_lo."""
            out = np.zeros(deg_out)
            mid = 0.5 * (y_lo + y_hi)
            if mid <= self.breaks[0]:
                return out
            if mid >= self.breaks[-1]:
                out[0] = total
                return out
            i = int(np.clip(np.searchsorted(self.breaks, mid, side="right") - 1, 0, len(self.coeffs) - 1))
            s0 = y_lo - self.breaks[i]
            shifted = _taylor_shift(anti[i], s0)
            out[: len(shifted)] = shifted
            out[0] += cum[i]
            return out

        pieces = []
        inv_w = 1.0 / width
        deg_out = d + 2
        for j in range(len(new_breaks) - 1):
            u, v = new_breaks[j], new_breaks[j + 1]
            fp = cumulative_poly(u + h, v + h, deg_out)
            fm = cumulative_poly(u - h, v - h, deg_out)
            pieces.append((fp - fm) * inv_w)
        return PiecewisePoly(new_breaks, np.array(pieces))

    def convolve_boxes(self, widths) -> "PiecewisePoly":
        out = self
        for w in widths:
            out = out.convolve_box(float(w))
        return out

    # -- transforms ----------------------------------------------------------

    def affine_image(self, scale: float, shift: float) -> "PiecewisePoly":
        """The function x -> f((x - shift)/scale) for scale > 0."""
        if scale <= 0:
            raise ValueError("scale must be positive")
        inv = 1.0 / scale
        coeffs = self.coeffs * inv ** np.arange(self.degree + 1)[None, :]
        return PiecewisePoly(self.breaks * scale + shift, coeffs)

    def scaled_values(self, factor: float) -> "PiecewisePoly":
        return PiecewisePoly(self.breaks.copy(), self.coeffs * factor)

    def __sub__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        if not np.array_equal(self.breaks, other.breaks):
            raise ValueError("operands must share breakpoints")
        d = max(self.degree, other.degree)
        a = np.zeros((len(self.coeffs), d + 1))
        b = np.zeros_like(a)
        a[:, : self.degree + 1] = self.coeffs
        b[:, : other.degree + 1] = other.coeffs
        return PiecewisePoly(self.breaks.copy(), a - b)

    def one_minus(self) -> "PiecewisePoly":
        c = self.coeffs.copy()
        c[:, 0] -= 1.0
        return PiecewisePoly(self.breaks.copy(), -c)

    def resegment(self, breaks: np.ndarray) -> "PiecewisePoly":
        """Re-express on a finer breakpoint set covering the support."""
        breaks = np.asarray(breaks, dtype=float)
        if breaks[0] > self.breaks[0] or breaks[-1] < self.breaks[-1]:
            raise ValueError("new breakpoints must cover the support")
        d = self.degree
        out = np.zeros((len(breaks) - 1, d + 1))
        mids = 0.5 * (breaks[:-1] + breaks[1:])
        for j, mid in enumerate(mids):
            if mid < self.breaks[0] or mid > self.breaks[-1]:
                continue
            i = int(np.clip(np.searchsorted(self.breaks, mid, side="right") - 1, 0, len(self.coeffs) - 1))
            out[j] = _taylor_shift(self.coeffs[i], breaks[j] - self.breaks[i])
        return PiecewisePoly(breaks, out)

    @staticmethod
    def merged_breaks(*pps: "PiecewisePoly") -> np.ndarray:
        allb = np.unique(np.concatenate([pp.breaks for pp in pps]))
        scale = max(abs(allb[0]), abs(allb[-1]), 1e-30)
        keep = np.concatenate([[True], np.diff(allb) > 1e-13 * scale])
        return allb[keep]

    def subtract(self, other: "PiecewisePoly") -> "PiecewisePoly":
        """Difference on merged breakpoints (supports may differ)."""
        breaks = self.merged_breaks(self, other)
        return self.resegment(breaks) - other.resegment(breaks)

    def cumulative(self, zero_total_tol: float = 1e-10) -> "PiecewisePoly":
        """x -> integral from -inf to x, for signed densities of zero total mass.

        Only zero-total inputs have a compactly supported cumulative, which is
        what this representation can hold; anything else is rejected.
        """
        masses = self.piece_masses()
        total = float(masses.sum())
        if abs(total) > zero_total_tol:
            raise ValueError(f"cumulative needs zero total mass, got {total:.3e}")
        d = self.degree
        anti = np.zeros((len(self.coeffs), d + 2))
        anti[:, 1:] = self.coeffs / np.arange(1, d + 2)[None, :]
        anti[:, 0] = np.concatenate([[0.0], np.cumsum(masses)[:-1]])
        return PiecewisePoly(self.breaks.copy(), anti)

    # -- measurements ---------------------------------------------------------

    def log_sup_abs(self, samples_per_piece: int | None = None) -> float:
        """ln(sup |f|) over the support, by dense per-piece evaluation.

        Differentiation is exact; only this final supremum uses sampling.
        Chebyshev-spaced points plus endpoints keep the bias negligible for
        the certificate tolerances used downstream.
        """
        n = samples_per_piece or max(4 * (self.degree + 4), 24)
        nodes = 0.5 * (1.0 - np.cos(np.linspace(0.0, np.pi, n)))
        widths = np.diff(self.breaks)
        t = nodes[None, :] * widths[:, None]
        val = np.zeros_like(t)
        for j in range(self.degree, -1, -1):
            val = val * t + self.coeffs[:, j][:, None]
        m = float(np.abs(val).max()) if val.size else 0.0
        return np.log(m) if m > 0 else -np.inf

    def value_range(self, samples_per_piece: int | None = None) -> tuple[float, float]:
        n = samples_per_piece or max(4 * (self.degree + 4), 24)
        nodes = 0.5 * (1.0 - np.cos(np.linspace(0.0, np.pi, n)))
        widths = np.diff(self.breaks)
        t = nodes[None, :] * widths[:, None]
        val = np.zeros_like(t)
        for j in range(self.degree, -1, -1):
            val = val * t + self.coeffs[:, j][:, None]
        return float(val.min()), float(val.max())

    def snap_plateau(self, lo: float, hi: float, tol: float = 1e-9) -> float:
        """Force pieces inside [lo, hi] to the exact constant 1.

        Returns the largest deviation removed; raises if any exceeds tol
        (that would mean the construction, not roundoff, was wrong).
        """
        worst = 0.0
        for i in range(len(self.coeffs)):
            if self.breaks[i] >= lo - 1e-15 and self.breaks[i + 1] <= hi + 1e-15:
                dev = abs(self.coeffs[i, 0] - 1.0) + np.abs(self.coeffs[i, 1:]).sum()
                worst = max(worst, float(dev))
                if dev > tol:
                    raise ValueError(
                        f"plateau piece deviates from 1 by {dev:.3e} (> {tol:.1e})"
                    )
                self.coeffs[i] = 0.0
                self.coeffs[i, 0] = 1.0
        return worst
