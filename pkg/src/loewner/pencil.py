"""Affine PSD matrix pencils and their Schur-complement evaluation.

A realization is the data ``(e, A0, A_1..A_k)`` with unit vector e and PSD
coefficient matrices; it represents the matrix function

    F(X) = (e (x) I)*  S(L(X))  (e (x) I),
    L(X) = A0 (x) I + sum_i A_i (x) X_i,

where S is the shorted operator onto the subspace spanned by e.  Functions of
this shape are automatically operator monotone and operator concave in the
Loewner order, which is what the verify suites exercise.

Evaluation rotates e into the first coordinate (deterministic Householder
reflection), so the shorted operator always pivots on the leading n rows.
The pseudo-inverse of the trailing block is computed per connected component
of its sparsity pattern: for arrowhead-built realizations the components are
n x n blocks, which keeps large-node quadrature realizations cheap.  The
blockwise path is algebraically identical to `shorted.shorted_operator`
(Z >= 0 iff Z22 >= 0, the range condition holds, and the complement is >= 0)
and is cross-checked against it in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numlin import (
    DEFAULT_PSD_TOL,
    DimensionMismatch,
    MatrixTuple,
    SymMatrix,
    _as_array,
    _sym,
    as_tuple,
)
from .shorted import SingularPivotComplement

__all__ = [
    "PencilRealization",
    "PencilDomainError",
    "householder_to_e1",
    "assemble_pencil",
    "eval",
    "eval_complex",
    "b_form",
    "from_b_form",
]


class PencilDomainError(ValueError):
    """The pencil is not PSD at the requested point (outside the realized domain)."""


def _check_psd_coeff(m: np.ndarray, tol: float, what: str) -> None:
    vals = np.linalg.eigvalsh(m)
    if vals[0] < -tol * max(1.0, abs(float(vals[-1]))):
        raise ValueError(f"{what} is not PSD: lambda_min = {vals[0]:.3e}")


@dataclass(frozen=True)
class PencilRealization:
    """Immutable affine-pencil realization (e, A0, A_1..A_k).

    Invariants enforced at construction: ``||e|| = 1`` to 1e-12 and every
    coefficient PSD within the relative tolerance.  Stored in affine form;
    ``b_form`` converts to the normalized-at-identity form
    ``B0 (x) I + sum B_i (x) (X_i - I)`` with ``B_i = A_i``,
    ``B0 = A0 + sum A_i`` (so B0 >= sum B_i iff A0 >= 0).
    """

    e: np.ndarray
    a0: SymMatrix
    coeffs: tuple
    psd_tol: float = DEFAULT_PSD_TOL

    def __post_init__(self):
        e = np.asarray(self.e, dtype=float).reshape(-1)
        if abs(np.linalg.norm(e) - 1.0) > 1e-12:
            raise ValueError(f"||e|| = {np.linalg.norm(e):.15f} is not 1 within 1e-12")
        e.setflags(write=False)
        object.__setattr__(self, "e", e)
        a0 = _sym(self.a0)
        coeffs = tuple(_sym(c) for c in self.coeffs)
        if not coeffs:
            raise ValueError("realization needs at least one variable coefficient")
        m = e.shape[0]
        if a0.n != m or any(c.n != m for c in coeffs):
            raise DimensionMismatch("e, A0 and all A_i must share the auxiliary dimension")
        _check_psd_coeff(a0.entries, self.psd_tol, "A0")
        for i, c in enumerate(coeffs):
            _check_psd_coeff(c.entries, self.psd_tol, f"A{i + 1}")
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def k(self) -> int:
        return len(self.coeffs)

    @property
    def m(self) -> int:
        return self.e.shape[0]


def householder_to_e1(e) -> np.ndarray:
    """Deterministic orthogonal Q with Q e = e1 (identity when e already is e1)."""
    e = np.asarray(e, dtype=float).reshape(-1)
    m = e.shape[0]
    v = e - np.eye(m)[0]
    vv = float(v @ v)
    if vv <= 1e-28:
        return np.eye(m)
    return np.eye(m) - (2.0 / vv) * np.outer(v, v)


def assemble_pencil(r: PencilRealization, x) -> SymMatrix:
    """Kronecker-structured pencil ``A0 (x) I_n + sum A_i (x) X_i`` at a tuple."""
    xt = as_tuple(x)
    if xt.k != r.k:
        raise DimensionMismatch(f"realization has {r.k} variables, point has {xt.k}")
    n = xt.n
    out = np.kron(r.a0.entries, np.eye(n))
    for c, xi in zip(r.coeffs, xt.items):
        out = out + np.kron(c.entries, xi.entries)
    return SymMatrix(out)


def _components(adj: np.ndarray) -> list:
    """Connected components of a symmetric boolean adjacency matrix."""
    n = adj.shape[0]
    unseen = np.ones(n, dtype=bool)
    comps = []
    while unseen.any():
        seed = int(np.flatnonzero(unseen)[0])
        comp = np.zeros(n, dtype=bool)
        comp[seed] = True
        frontier = comp.copy()
        while frontier.any():
            nxt = adj[frontier].any(axis=0) & ~comp
            comp |= nxt
            frontier = nxt
        unseen &= ~comp
        comps.append(np.flatnonzero(comp))
    return comps


def _rotated_coefficients(r: PencilRealization):
    """Coefficient matrices with e rotated into the first coordinate."""
    if abs(r.e[0] - 1.0) < 1e-15 and r.m > 1 and np.all(np.abs(r.e[1:]) < 1e-15):
        return r.a0.entries, [c.entries for c in r.coeffs]
    if r.m == 1:
        return r.a0.entries, [c.entries for c in r.coeffs]
    q = householder_to_e1(r.e)
    return q @ r.a0.entries @ q.T, [q @ c.entries @ q.T for c in r.coeffs]


def _aux_blocks_diagonal(a0r, coeffs_r) -> bool:
    """True when every coefficient's aux-by-aux block is exactly diagonal.

    Arrowhead-built pencils have this shape, so the trailing block of the
    assembled pencil splits into per-aux-coordinate n x n blocks and the whole
    evaluation runs on small batched operations without forming the mn x mn
    Kronecker matrix.
    """
    for c in (a0r, *coeffs_r):
        aux = c[1:, 1:]
        if np.count_nonzero(aux - np.diag(np.diag(aux))):
            return False
    return True


def _assembled_pencil(a0r, coeffs_r, xt: MatrixTuple, dtype=float):
    n = xt.n
    out = np.kron(a0r, np.eye(n)).astype(dtype)
    for c, xi in zip(coeffs_r, xt.items):
        out = out + np.kron(c, np.asarray(xi.entries, dtype=dtype))
    return out


def _arrowhead_short(a0r, coeffs_r, arrays, rank_tol, psd_tol, check_domain):
    """Shorted operator of an arrowhead pencil, batched over aux coordinates.

    For aux coordinate j the trailing block is
    ``B_j = a0[j,j] I + sum_i c_i[j,j] X_i`` and the coupling to the pivot is
    ``R_j = a0[j,0] I + sum_i c_i[j,0] X_i``; the complement is
    ``Z11 - sum_j R_j* B_j^+ R_j`` with the same admission checks as the
    generic path.
    """
    n = arrays[0].shape[0]
    eye = np.eye(n)
    x = np.stack(arrays)
    d0 = np.diag(a0r)[1:]
    o0 = a0r[1:, 0]
    di = np.stack([np.diag(c)[1:] for c in coeffs_r])
    oi = np.stack([c[1:, 0] for c in coeffs_r])
    z11 = a0r[0, 0] * eye + np.einsum("i,iab->ab", np.array([c[0, 0] for c in coeffs_r]), x)
    blocks = d0[:, None, None] * eye + np.einsum("ij,iab->jab", di, x)
    couple = o0[:, None, None] * eye + np.einsum("ij,iab->jab", oi, x)
    lam, u = np.linalg.eigh(blocks)
    scale = max(1.0, float(np.linalg.eigvalsh(z11)[-1]), float(lam.max(initial=0.0)))
    if check_domain and float(lam.min(initial=0.0)) < -psd_tol * scale:
        raise PencilDomainError(
            f"pencil not PSD at X: trailing-block eigenvalue {float(lam.min()):.3e}")
    g = np.einsum("jba,jbc->jac", u.conj(), couple)
    cut = rank_tol * np.clip(lam[:, -1], 0.0, None)
    keep = lam > cut[:, None]
    if check_domain and not np.all(keep):
        off = np.where(keep[:, :, None], 0.0, np.abs(g) ** 2)
        off_norm = math.sqrt(float(off.sum()))
        if off_norm > 10.0 * math.sqrt(rank_tol) * scale:
            raise PencilDomainError(
                f"pencil not PSD at X: range condition violated "
                f"({off_norm:.3e} > {10.0 * math.sqrt(rank_tol) * scale:.3e})")
    winv = np.where(keep, 1.0 / np.where(keep, lam, 1.0), 0.0)
    short = z11 - np.einsum("jab,ja,jac->bc", g.conj(), winv, g)
    short = (short + short.conj().T) / 2.0
    if check_domain:
        smin = float(np.linalg.eigvalsh(short)[0])
        if smin < -psd_tol * scale:
            raise PencilDomainError(
                f"pencil not PSD at X: Schur complement eigenvalue {smin:.3e}")
    return short


def _short_leading_blockwise(z, n, rank_tol, psd_tol, check_domain):
    """Shorted operator onto the leading n coordinates, componentwise.

    Fuses the PSD-domain admission into the factorization: the trailing block
    must be PSD per component, the off-range mass of the coupling block must
    vanish, and the resulting complement must be PSD.  Together these are
    equivalent to Z >= 0.
    """
    z11 = z[:n, :n]
    z21 = z[n:, :n]
    z22 = z[n:, n:]
    range_tol = 10.0 * math.sqrt(rank_tol)
    short = z11.copy()
    comps = _components(z22 != 0.0)
    by_size: dict = {}
    for idx in comps:
        by_size.setdefault(len(idx), []).append(idx)
    decomposed = []
    scale = max(1.0, float(np.linalg.eigvalsh(z11)[-1]))
    for group in by_size.values():
        blocks = np.stack([z22[np.ix_(idx, idx)] for idx in group])
        lam, u = np.linalg.eigh(blocks)
        scale = max(scale, float(lam.max(initial=0.0)))
        rows = np.stack([z21[idx, :] for idx in group])
        g = np.einsum("cij,cil->cjl", u.conj(), rows)
        decomposed.append((group, lam, g))
    for group, lam, g in decomposed:
        for b in range(len(group)):
            lam_b = lam[b]
            if check_domain and lam_b[0] < -psd_tol * scale:
                raise PencilDomainError(
                    f"pencil not PSD at X: trailing-block eigenvalue {lam_b[0]:.3e}"
                )
            cut = rank_tol * max(float(lam_b[-1]), 0.0)
            keep = lam_b > cut
            if check_domain and not np.all(keep):
                off = g[b][~keep, :]
                off_norm = float(np.linalg.norm(off, 2)) if off.size else 0.0
                if off_norm > range_tol * scale:
                    raise PencilDomainError(
                        f"pencil not PSD at X: range condition violated "
                        f"({off_norm:.3e} > {range_tol * scale:.3e})"
                    )
            gk = g[b][keep, :]
            short = short - gk.conj().T @ (gk / lam_b[keep][:, None])
    short = (short + short.conj().T) / 2.0
    if check_domain:
        smin = float(np.linalg.eigvalsh(short)[0])
        if smin < -psd_tol * scale:
            raise PencilDomainError(
                f"pencil not PSD at X: Schur complement eigenvalue {smin:.3e}"
            )
    return short


def eval(r: PencilRealization, x, tol: float = DEFAULT_PSD_TOL,
         rank_tol: float = 1e-12, check_domain: bool = True) -> SymMatrix:
    """Evaluate the realized function at a tuple of self-adjoint matrices.

    Requires the pencil to be PSD at X (the realized domain); raises
    PencilDomainError otherwise.  ``check_domain=False`` skips the admission
    checks for certified-positive inputs.  The result is PSD.
    """
    xt = as_tuple(x)
    if xt.k != r.k:
        raise DimensionMismatch(f"realization has {r.k} variables, point has {xt.k}")
    n = xt.n
    if r.m == 1:
        out = r.a0.entries[0, 0] * np.eye(n)
        for c, xi in zip(r.coeffs, xt.items):
            out = out + c.entries[0, 0] * xi.entries
        if check_domain:
            vals = np.linalg.eigvalsh((out + out.conj().T) / 2.0)
            if vals[0] < -tol * max(1.0, float(vals[-1])):
                raise PencilDomainError(
                    f"pencil not PSD at X: eigenvalue {vals[0]:.3e}"
                )
        return SymMatrix(out)
    a0r, coeffs_r = _rotated_coefficients(r)
    if _aux_blocks_diagonal(a0r, coeffs_r):
        short = _arrowhead_short(a0r, coeffs_r, [xi.entries for xi in xt.items],
                                 rank_tol, tol, check_domain)
        return SymMatrix(short)
    dtype = complex if any(np.iscomplexobj(xi.entries) for xi in xt.items) else float
    z = _assembled_pencil(a0r, coeffs_r, xt, dtype=dtype)
    short = _short_leading_blockwise(z, n, rank_tol, tol, check_domain)
    return SymMatrix(short)


def _arrowhead_schur_complex(a0r, coeffs_r, arrays, sv_tol):
    """Complex-point Schur complement of an arrowhead pencil, batched.

    The coefficients are real symmetric, so the pivot-row and pivot-column
    coupling blocks coincide (no conjugation): the complement is
    ``Z11 - sum_j R_j B_j^{-1} R_j``.
    """
    n = arrays[0].shape[0]
    eye = np.eye(n)
    x = np.stack(arrays)
    d0 = np.diag(a0r)[1:]
    o0 = a0r[1:, 0]
    di = np.stack([np.diag(c)[1:] for c in coeffs_r])
    oi = np.stack([c[1:, 0] for c in coeffs_r])
    z11 = a0r[0, 0] * eye.astype(complex) \
        + np.einsum("i,iab->ab", np.array([c[0, 0] for c in coeffs_r]), x)
    blocks = d0[:, None, None] * eye + np.einsum("ij,iab->jab", di, x)
    couple = o0[:, None, None] * eye + np.einsum("ij,iab->jab", oi, x)
    scale = max(1.0, float(np.abs(blocks).sum(axis=-1).max()),
                float(np.abs(z11).sum(axis=-1).max()))
    smin = float(np.linalg.svd(blocks, compute_uv=False).min(initial=np.inf))
    if smin <= sv_tol * scale:
        raise SingularPivotComplement(
            f"pivot complement block singular (sigma_min = {smin:.3e}); "
            "imaginary-part positivity violated beyond tolerance")
    solved = np.linalg.solve(blocks, couple)
    return z11 - np.einsum("jab,jbc->ac", couple, solved)


def eval_complex(r: PencilRealization, x, sv_tol: float = 1e-12) -> np.ndarray:
    """Evaluate the pencil's analytic continuation at a tuple with definite
    imaginary parts.

    Accepts tuples whose imaginary parts are all positive definite or all
    negative definite (the two half-planes are symmetric; the conjugate
    half-plane is needed by the conjugate-symmetry checks).  The trailing
    block is then invertible and a plain blockwise Schur complement applies.
    Returns a complex n x n matrix, not Hermitian in general.
    """
    arrays = [np.asarray(xi, dtype=complex) for xi in
              (x.arrays() if isinstance(x, MatrixTuple) else
               ([_as_array(x)] if np.asarray(_as_array(x)).ndim == 2 else
                [_as_array(xi) for xi in x]))]
    if len(arrays) != r.k:
        raise DimensionMismatch(f"realization has {r.k} variables, point has {len(arrays)}")
    n = arrays[0].shape[0]
    if any(a.shape != (n, n) for a in arrays):
        raise DimensionMismatch("all tuple entries must share one dimension")
    signs = []
    for a in arrays:
        im = (a - a.conj().T) / 2j
        vals = np.linalg.eigvalsh(im)
        if vals[0] > 0:
            signs.append(1)
        elif vals[-1] < 0:
            signs.append(-1)
        else:
            raise ValueError("imaginary part of every coordinate must be definite")
    if len(set(signs)) != 1:
        raise ValueError("imaginary parts must share one sign across coordinates")

    a0r, coeffs_r = _rotated_coefficients(r)
    if r.m == 1:
        out = a0r[0, 0] * np.eye(n, dtype=complex)
        for c, a in zip(coeffs_r, arrays):
            out = out + c[0, 0] * a
        return out
    if _aux_blocks_diagonal(a0r, coeffs_r):
        return _arrowhead_schur_complex(a0r, coeffs_r, arrays, sv_tol)
    z = np.kron(a0r, np.eye(n)).astype(complex)
    for c, a in zip(coeffs_r, arrays):
        z = z + np.kron(c, a)
    z11 = z[:n, :n]
    z12 = z[:n, n:]
    z21 = z[n:, :n]
    z22 = z[n:, n:]
    scale = max(1.0, float(np.abs(z).sum(axis=1).max()))
    short = z11.copy()
    for idx in _components(z22 != 0.0):
        block = z22[np.ix_(idx, idx)]
        smin = float(np.linalg.svd(block, compute_uv=False)[-1])
        if smin <= sv_tol * scale:
            raise SingularPivotComplement(
                f"pivot complement block singular (sigma_min = {smin:.3e}); "
                "imaginary-part positivity violated beyond tolerance"
            )
        short = short - z12[:, idx] @ np.linalg.solve(block, z21[idx, :])
    return short


def b_form(r: PencilRealization):
    """Convert to (B0, [B_1..B_k]) with B_i = A_i and B0 = A0 + sum A_i."""
    b0 = r.a0.entries.copy()
    for c in r.coeffs:
        b0 = b0 + c.entries
    return SymMatrix(b0), [SymMatrix(c.entries) for c in r.coeffs]


def from_b_form(k: int, m: int, e, b0, b, tol: float = DEFAULT_PSD_TOL) -> PencilRealization:
    """Inverse of `b_form`; validates B_i >= -tol and B0 >= sum B_i - tol."""
    if len(b) != k:
        raise ValueError(f"expected {k} coefficient matrices, got {len(b)}")
    e = np.asarray(e, dtype=float).reshape(-1)
    if e.shape[0] != m:
        raise ValueError(f"expected e of length {m}, got {e.shape[0]}")
    a0 = _as_array(_sym(b0)).copy()
    for bi in b:
        a0 = a0 - _as_array(_sym(bi))
    try:
        return PencilRealization(e, SymMatrix(a0), tuple(_sym(bi) for bi in b), psd_tol=tol)
    except ValueError as exc:
        raise ValueError(f"B-form constraints violated: {exc}") from exc
