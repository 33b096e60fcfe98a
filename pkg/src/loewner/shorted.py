"""Shorted operator (Schur complement onto a leading subspace) of a PSD matrix.

For a PSD block matrix ``Z = [[Z11, Z12], [Z21, Z22]]`` with pivot block of
size s, the shorted operator is ``Z11 - Z12 Z22^+ Z21`` with a rank-truncated
pseudo-inverse.  It is the maximal self-adjoint X on the pivot subspace with
``[[X, 0], [0, 0]] <= Z``, which is the property every downstream monotonicity
argument leans on.  The pivot subspace is always the span of the first s
coordinates; callers rotate other subspaces into leading position.

`variational_infimum` is the independent oracle for the same quantity:
``v* S v = inf_w [v; w]* Z [v; w]``, solved through the stationarity system in
a separately computed eigenbasis of Z22 (no intermediates shared with
`shorted_operator`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numlin import (
    DEFAULT_PSD_TOL,
    NotPositiveSemidefinite,
    SymMatrix,
    _as_array,
    _psd_check,
    _sym,
)

__all__ = [
    "ShortedResult",
    "RangeConditionViolation",
    "SingularPivotComplement",
    "shorted_operator",
    "variational_infimum",
    "block_schur_general",
]

DEFAULT_RANK_TOL = 1e-12


class RangeConditionViolation(ValueError):
    """ran(Z21) is not contained in ran(Z22^(1/2)) within tolerance.

    For certified-PSD input this cannot happen, so it signals input corrupted
    past the PSD tolerance (or a tolerance misconfiguration); it is reported
    rather than silently projected away.
    """


class SingularPivotComplement(ValueError):
    """The trailing block passed to a plain Schur complement is singular."""


@dataclass(frozen=True)
class ShortedResult:
    """Shorted operator plus the factor C with Z21 = Z22^(1/2) C."""

    s_short: SymMatrix
    c_factor: np.ndarray
    rank_used: int


def shorted_operator(
    z,
    s: int,
    rank_tol: float = DEFAULT_RANK_TOL,
    psd_tol: float = DEFAULT_PSD_TOL,
    range_tol: float | None = None,
) -> ShortedResult:
    """Shorted operator of a PSD matrix onto its first ``s`` coordinates.

    Parameters
    ----------
    z : PSD self-adjoint matrix (SymMatrix or array).
    s : pivot dimension, 1 <= s <= N.  ``s == N`` returns Z itself.
    rank_tol : eigenvalues of Z22 below ``rank_tol * lambda_max(Z22)`` are
        treated as exact zeros in the pseudo-inverse.
    psd_tol : relative PSD admission tolerance for Z.
    range_tol : threshold for the range condition
        ``||(I - P_range) Z21|| <= range_tol * ||Z||``; defaults to
        ``10 * sqrt(rank_tol)``, the Cauchy-Schwarz bound for PSD input.

    Raises
    ------
    NotPositiveSemidefinite
        Z has an eigenvalue below the relative tolerance.
    RangeConditionViolation
        Z21 has mass against the truncated null space of Z22.
    """
    zm = _as_array(_sym(z))
    n = zm.shape[0]
    if not 1 <= s <= n:
        raise ValueError(f"pivot dimension {s} outside [1, {n}]")
    vals = np.linalg.eigvalsh(zm)
    _psd_check(vals, psd_tol, "shorted_operator")
    znorm = max(float(vals[-1]), 0.0)
    if s == n:
        empty = np.zeros((0, s), dtype=zm.dtype)
        return ShortedResult(SymMatrix(zm), empty, 0)
    if range_tol is None:
        range_tol = 10.0 * math.sqrt(rank_tol)

    z11 = zm[:s, :s]
    z21 = zm[s:, :s]
    z22 = zm[s:, s:]
    lam, u = np.linalg.eigh(z22)
    cut = rank_tol * max(float(lam[-1]), 0.0)
    keep = lam > cut
    g = u.conj().T @ z21
    if not np.all(keep):
        off_range = float(np.linalg.norm(g[~keep, :], 2)) if g[~keep, :].size else 0.0
        if off_range > range_tol * max(znorm, 1e-300):
            raise RangeConditionViolation(
                f"||(I - P)Z21|| = {off_range:.3e} exceeds "
                f"{range_tol:.1e} * ||Z|| = {range_tol * znorm:.3e}"
            )
    g_keep = g[keep, :]
    lam_keep = lam[keep]
    c = u[:, keep] @ (g_keep / np.sqrt(lam_keep)[:, None])
    short = z11 - c.conj().T @ c
    return ShortedResult(SymMatrix(short), c, int(keep.sum()))


def variational_infimum(
    z,
    v,
    rank_tol: float = DEFAULT_RANK_TOL,
    psd_tol: float = DEFAULT_PSD_TOL,
) -> float:
    """inf over w of the quadratic ``[v; w]* Z [v; w]`` for PSD Z.

    Solves the stationarity system ``Z22 w = -Z21 v`` in an eigenbasis of Z22
    with small-eigenvalue truncation.  Used as the independent maximality
    oracle for `shorted_operator`; the two share no intermediate results.
    """
    zm = _as_array(_sym(z))
    vv = np.asarray(v).reshape(-1)
    s = vv.shape[0]
    if not 1 <= s <= zm.shape[0]:
        raise ValueError(f"vector length {s} outside [1, {zm.shape[0]}]")
    vals = np.linalg.eigvalsh(zm)
    _psd_check(vals, psd_tol, "variational_infimum")
    head = float(np.real(vv.conj() @ zm[:s, :s] @ vv))
    if s == zm.shape[0]:
        return head
    rhs = zm[s:, :s] @ vv
    lam, u = np.linalg.eigh(zm[s:, s:])
    cut = rank_tol * max(float(lam[-1]), 0.0)
    b = u.conj().T @ rhs
    keep = lam > cut
    return head - float(np.sum(np.abs(b[keep]) ** 2 / lam[keep]))


def block_schur_general(z, s: int, sv_tol: float = 1e-12) -> np.ndarray:
    """Plain Schur complement ``Z11 - Z12 Z22^{-1} Z21`` for invertible Z22.

    Accepts arbitrary (possibly complex, non-self-adjoint) square input; this
    is the kernel for evaluating pencils at points with definite imaginary
    part, where invertibility of the trailing block is guaranteed.
    """
    zm = np.asarray(_as_array(z))
    n = zm.shape[0]
    if zm.ndim != 2 or zm.shape[1] != n:
        raise ValueError("input must be square")
    if not 1 <= s <= n:
        raise ValueError(f"pivot dimension {s} outside [1, {n}]")
    if s == n:
        return zm.copy()
    z22 = zm[s:, s:]
    znorm = float(np.linalg.norm(zm, 2))
    smin = float(np.linalg.svd(z22, compute_uv=False)[-1])
    if smin <= sv_tol * max(znorm, 1e-300):
        raise SingularPivotComplement(
            f"trailing block singular: sigma_min = {smin:.3e} <= "
            f"{sv_tol:.1e} * ||Z||"
        )
    return zm[:s, :s] - zm[:s, s:] @ np.linalg.solve(z22, zm[s:, :s])
