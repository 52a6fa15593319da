"""Piecewise polynomial functions on an interval partition.

The partition is a strictly increasing breakpoint sequence x_0 < ... < x_n;
piece i is a polynomial on the open cell (x_i, x_{i+1}).  Values exactly at a
breakpoint are resolved by a fixed tie-break (the right piece), and one-sided
limits are available explicitly.  All evaluation goes through a single Horner
loop so that the compiled and NumPy simulation kernels see identical
floating-point arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["PiecewisePoly", "horner", "cell_index"]


def horner(coeffs, x):
    """Evaluate a polynomial with ascending coefficients at x (scalar or array).

    The loop runs from the highest coefficient down; the compiled kernel uses
    the same order, so results agree bit for bit.
    """
    c = np.asarray(coeffs, dtype=np.float64)
    p = np.full_like(np.asarray(x, dtype=np.float64), c[-1])
    for j in range(len(c) - 2, -1, -1):
        p = p * x + c[j]
    if np.ndim(x) == 0:
        return float(p)
    return p


def cell_index(breakpoints, x):
    """Index of the cell containing x: largest i with x_i <= x, clipped.

    Tie-break at a breakpoint is the right piece; x == x_n maps to the last
    piece (one-sided from the left).
    """
    bp = np.asarray(breakpoints)
    idx = np.searchsorted(bp, x, side="right") - 1
    return np.clip(idx, 0, len(bp) - 2)


@dataclass(frozen=True)
class PiecewisePoly:
    """Piecewise polynomial with ascending per-piece coefficients."""

    breakpoints: tuple
    coeffs: tuple  # one ascending coefficient tuple per piece

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=np.float64)
        if bp.ndim != 1 or len(bp) < 2:
            raise DomainError("need at least two breakpoints")
        if not np.all(np.isfinite(bp)):
            raise DomainError("breakpoints must be finite")
        if not np.all(np.diff(bp) > 0):
            raise DomainError("breakpoints must be strictly increasing")
        if len(self.coeffs) != len(bp) - 1:
            raise DomainError(
                f"{len(bp) - 1} pieces required, got {len(self.coeffs)}"
            )
        object.__setattr__(self, "breakpoints", tuple(float(v) for v in bp))
        object.__setattr__(
            self, "coeffs", tuple(tuple(float(c) for c in p) for p in self.coeffs)
        )
        if any(len(p) == 0 for p in self.coeffs):
            raise DomainError("empty coefficient list")

    # -- constructors ----------------------------------------------------

    @classmethod
    def constant(cls, a: float, b: float, value: float) -> "PiecewisePoly":
        return cls((a, b), ((value,),))

    @classmethod
    def single(cls, a: float, b: float, coeffs) -> "PiecewisePoly":
        return cls((a, b), (tuple(coeffs),))

    @classmethod
    def from_values(cls, breakpoints, values) -> "PiecewisePoly":
        """Piecewise constant from per-piece values."""
        return cls(tuple(breakpoints), tuple((float(v),) for v in values))

    # -- geometry ---------------------------------------------------------

    @property
    def a(self) -> float:
        return self.breakpoints[0]

    @property
    def b(self) -> float:
        return self.breakpoints[-1]

    @property
    def n_pieces(self) -> int:
        return len(self.coeffs)

    @property
    def interior_breakpoints(self) -> tuple:
        return self.breakpoints[1:-1]

    @property
    def max_degree(self) -> int:
        return max(len(p) for p in self.coeffs) - 1

    def coeff_matrix(self) -> np.ndarray:
        """Zero-padded (n_pieces, max_degree+1) coefficient array for kernels."""
        out = np.zeros((self.n_pieces, self.max_degree + 1))
        for i, p in enumerate(self.coeffs):
            out[i, : len(p)] = p
        return out

    # -- evaluation -------------------------------------------------------

    def __call__(self, x):
        """Evaluate with the right-piece tie-break at breakpoints."""
        x_arr = np.asarray(x, dtype=np.float64)
        idx = cell_index(self.breakpoints, x_arr)
        cm = self.coeff_matrix()
        p = cm[idx, -1]
        for j in range(cm.shape[1] - 2, -1, -1):
            p = p * x_arr + cm[idx, j]
        if np.ndim(x) == 0:
            return float(p)
        return p

    def eval_piece(self, i: int, x):
        """Evaluate piece i's polynomial (one-sided limits at its edges)."""
        return horner(self.coeffs[i], x)

    def one_sided(self, x: float, side: int):
        """Limit at x from the right (side=+1) or left (side=-1)."""
        bp = self.breakpoints
        i = int(cell_index(bp, x))
        if side < 0 and x <= bp[i] and i > 0:
            i -= 1
        return self.eval_piece(i, x)

    def derivative(self) -> "PiecewisePoly":
        out = []
        for p in self.coeffs:
            if len(p) == 1:
                out.append((0.0,))
            else:
                out.append(tuple(j * p[j] for j in range(1, len(p))))
        return PiecewisePoly(self.breakpoints, tuple(out))

    # -- algebra ----------------------------------------------------------

    def refine(self, extra_points) -> "PiecewisePoly":
        """Re-express on the union partition including extra interior points."""
        pts = [p for p in extra_points if self.a < p < self.b]
        new_bp = np.union1d(self.breakpoints, pts)
        mids = (new_bp[:-1] + new_bp[1:]) / 2.0
        idx = cell_index(self.breakpoints, mids)
        return PiecewisePoly(tuple(new_bp), tuple(self.coeffs[int(i)] for i in idx))

    def scale(self, factor: float) -> "PiecewisePoly":
        return PiecewisePoly(
            self.breakpoints,
            tuple(tuple(factor * c for c in p) for p in self.coeffs),
        )

    def add(self, other: "PiecewisePoly") -> "PiecewisePoly":
        if not (
            np.isclose(self.a, other.a) and np.isclose(self.b, other.b)
        ):
            raise DomainError("piecewise functions live on different intervals")
        merged = np.union1d(self.breakpoints, other.breakpoints)
        f = self.refine(merged[1:-1])
        g = other.refine(merged[1:-1])
        pieces = []
        for pf, pg in zip(f.coeffs, g.coeffs):
            n = max(len(pf), len(pg))
            pieces.append(
                tuple(
                    (pf[j] if j < len(pf) else 0.0) + (pg[j] if j < len(pg) else 0.0)
                    for j in range(n)
                )
            )
        return PiecewisePoly(f.breakpoints, tuple(pieces))

    def multiply_poly(self, coeffs) -> "PiecewisePoly":
        """Multiply every piece by one global polynomial."""
        q = tuple(float(c) for c in coeffs)
        out = []
        for p in self.coeffs:
            prod = [0.0] * (len(p) + len(q) - 1)
            for i, ci in enumerate(p):
                for j, cj in enumerate(q):
                    prod[i + j] += ci * cj
            out.append(tuple(prod))
        return PiecewisePoly(self.breakpoints, tuple(out))
