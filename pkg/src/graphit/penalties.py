"""Sparsity-promoting scalar potentials and their reweighting rules.

Every potential rho maps |u| to [0, inf), vanishes at 0, increases, and has a
nonincreasing derivative with right limit rho'(0+) = gamma. Concavity on
[0, inf) is what makes the tangent at any point an upper bound, which is the
mechanism behind the reweighted-l1 outer loop: the weight of entry (i, j) is
simply rho'(|A'_{i,j}|) at the current iterate A'.

Families
--------
log-sum      gamma * lam * (log(|u| + lam) - log(lam))
atan         (gamma / lam) * atan(lam |u|)
mangasarian  (gamma / lam) * (1 - exp(-lam |u|))
mcp          gamma |u| - u^2/(2 lam) capped at lam gamma^2 / 2
scad         linear, then quadratic blend, capped at (a+1) gamma^2 / 2
l1           gamma |u| (constant weights; the convex special case)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FAMILIES = ("log-sum", "atan", "mangasarian", "mcp", "scad", "l1")

_NEEDS_LAM = {"log-sum", "atan", "mangasarian", "mcp"}


@dataclass(frozen=True)
class Potential:
    """Tagged penalty description: family plus hyperparameters.

    gamma is the slope at 0+ for every family. lam shapes the non-convexity
    for log-sum/atan/mangasarian/mcp (smaller is closer to a 0-1 count).
    scad instead takes a > 2; l1 takes gamma only.
    """

    family: str
    gamma: float
    lam: float | None = None
    a: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown potential family {self.family!r}; choose from {FAMILIES}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.family in _NEEDS_LAM:
            if self.lam is None or not self.lam > 0:
                raise ValueError(f"{self.family} requires lam > 0, got {self.lam}")
        if self.family == "scad":
            if self.a is None or not self.a > 2:
                raise ValueError(f"scad requires a > 2, got {self.a}")

    def describe(self) -> str:
        parts = [f"gamma={self.gamma:g}"]
        if self.family in _NEEDS_LAM:
            parts.append(f"lam={self.lam:g}")
        if self.family == "scad":
            parts.append(f"a={self.a:g}")
        return f"{self.family}({', '.join(parts)})"


def rho(p: Potential, u) -> np.ndarray | float:
    """Potential value at |u|. Vectorized over array input."""
    au = np.abs(np.asarray(u, dtype=float))
    g = p.gamma
    if p.family == "log-sum":
        out = g * p.lam * (np.log(au + p.lam) - np.log(p.lam))
    elif p.family == "atan":
        out = (g / p.lam) * np.arctan(p.lam * au)
    elif p.family == "mangasarian":
        out = (g / p.lam) * -np.expm1(-p.lam * au)
    elif p.family == "mcp":
        out = np.where(au <= p.lam * g, g * au - au**2 / (2.0 * p.lam), 0.5 * p.lam * g * g)
    elif p.family == "scad":
        a = p.a
        out = np.select(
            [au <= g, au <= a * g],
            [g * au, -(g * g - 2.0 * a * g * au + au * au) / (2.0 * (a - 1.0))],
            default=0.5 * (a + 1.0) * g * g,
        )
    else:  # l1
        out = g * au
    return out if out.ndim else float(out)


def rho_prime(p: Potential, u) -> np.ndarray | float:
    """Derivative of the potential at |u|; at 0 this is the right limit gamma.

    For scad the middle branch is (a gamma - |u|) / (a - 1), the derivative of
    the quadratic blend; it decays continuously from gamma to 0.
    """
    au = np.abs(np.asarray(u, dtype=float))
    g = p.gamma
    if p.family == "log-sum":
        out = g * p.lam / (au + p.lam)
    elif p.family == "atan":
        out = g / (1.0 + p.lam**2 * au**2)
    elif p.family == "mangasarian":
        out = g * np.exp(-p.lam * au)
    elif p.family == "mcp":
        out = np.where(au <= p.lam * g, g - au / p.lam, 0.0)
    elif p.family == "scad":
        a = p.a
        out = np.select([au <= g, au <= a * g], [np.full_like(au, g), (a * g - au) / (a - 1.0)], default=0.0)
    else:  # l1
        out = np.full_like(au, g)
    return out if out.ndim else float(out)


def penalty_value(p: Potential, A: np.ndarray) -> float:
    """Total penalty of a matrix: sum of rho(|entry|) over all entries."""
    return float(np.sum(rho(p, A)))


def weight_matrix(p: Potential, A_prev: np.ndarray) -> np.ndarray:
    """Reweighting matrix: entrywise rho'(|A_prev|), in (0, gamma] pointwise."""
    return np.asarray(rho_prime(p, A_prev))


def emit_penalty_curve(p: Potential, grid) -> np.ndarray:
    """Tabulate (u, rho(|u|)) over a grid of abscissas, one row per point."""
    grid = np.asarray(grid, dtype=float)
    return np.column_stack([grid, rho(p, grid)])
