"""Dense self-adjoint linear algebra kernel.

Everything downstream (Schur complements, pencil evaluation, the property
suites) funnels through this module: eigendecomposition, the Loewner order
predicate, functional calculus on commuting tuples, PSD square root and
pseudo-inverse, unitary dilation of contractions, and the seeded random
generators used by every randomized suite.

Conventions
-----------
* Matrices are real symmetric by default; every kernel also accepts complex
  Hermitian input (`SymMatrix` symmetrizes with the conjugate transpose).
* PSD tolerances are relative: A counts as PSD when
  ``lambda_min(A) >= -tol * max(1, lambda_max(A))``.  Default tol 1e-9.
* All functions are pure; randomness enters only through explicit seeds or
  generators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_PSD_TOL = 1e-9

__all__ = [
    "DEFAULT_PSD_TOL",
    "SymMatrix",
    "MatrixTuple",
    "Contraction",
    "DimensionMismatch",
    "NotPositiveSemidefinite",
    "CommutationError",
    "sym_eig",
    "operator_norm",
    "loewner_leq",
    "apply_scalar_function",
    "psd_sqrt",
    "pinv_psd",
    "unitary_dilation",
    "random_pd",
    "random_commuting_tuple",
    "make_dominated_pair",
    "random_isometry",
    "random_contraction",
    "direct_sum",
    "tuple_direct_sum",
    "tuple_compress",
    "as_tuple",
]


class DimensionMismatch(ValueError):
    """Operands do not share the required dimensions."""


class NotPositiveSemidefinite(ValueError):
    """A matrix required to be PSD has an eigenvalue below tolerance."""


class CommutationError(ValueError):
    """A tuple required to commute fails the commutator tolerance."""


def _as_array(a) -> np.ndarray:
    if isinstance(a, SymMatrix):
        return a.entries
    return np.asarray(a)


def operator_norm(a) -> float:
    """Spectral norm (largest singular value)."""
    m = _as_array(a)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


@dataclass(frozen=True)
class SymMatrix:
    """Dense self-adjoint matrix; symmetrized at construction.

    ``entries`` always equals its conjugate transpose exactly, because the
    constructor stores ``(A + A*)/2``.  Real input stays real.
    """

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("dimension must be at least 1")
        dtype = np.complex128 if np.iscomplexobj(arr) else np.float64
        arr = arr.astype(dtype, copy=True)
        arr = (arr + arr.conj().T) / 2.0
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def norm(self) -> float:
        return operator_norm(self.entries)

    def __array__(self, dtype=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def _sym(a) -> SymMatrix:
    return a if isinstance(a, SymMatrix) else SymMatrix(np.asarray(a))


@dataclass(frozen=True)
class MatrixTuple:
    """k-tuple of same-dimension self-adjoint matrices.

    When ``commuting=True`` the constructor certifies
    ``max_{i,j} ||X_i X_j - X_j X_i|| <= commute_tol * max_i ||X_i||^2``.
    """

    items: tuple
    commuting: bool = False
    commute_tol: float = 1e-10

    def __post_init__(self):
        items = tuple(_sym(x) for x in self.items)
        if not items:
            raise ValueError("tuple must contain at least one matrix")
        n = items[0].n
        if any(x.n != n for x in items):
            raise DimensionMismatch("all tuple entries must share one dimension")
        object.__setattr__(self, "items", items)
        if self.commuting and len(items) > 1:
            scale = max(operator_norm(x) for x in items) ** 2
            worst = 0.0
            for i in range(len(items)):
                for j in range(i + 1, len(items)):
                    a, b = items[i].entries, items[j].entries
                    worst = max(worst, operator_norm(a @ b - b @ a))
            if worst > self.commute_tol * max(scale, 1e-300):
                raise CommutationError(
                    f"commutator norm {worst:.3e} exceeds "
                    f"{self.commute_tol:.1e} * max||X_i||^2"
                )

    @property
    def k(self) -> int:
        return len(self.items)

    @property
    def n(self) -> int:
        return self.items[0].n

    def arrays(self) -> list:
        return [x.entries for x in self.items]


def as_tuple(x, commuting: bool = False) -> MatrixTuple:
    """Coerce a MatrixTuple / SymMatrix / sequence of matrices to MatrixTuple."""
    if isinstance(x, MatrixTuple):
        return x
    if isinstance(x, SymMatrix) or (hasattr(x, "ndim") and np.asarray(x).ndim == 2):
        return MatrixTuple((x,), commuting=commuting)
    return MatrixTuple(tuple(x), commuting=commuting)


@dataclass(frozen=True)
class Contraction:
    """Rectangular map E -> K with operator norm at most 1 (+1e-12 slack)."""

    entries: np.ndarray
    norm_tol: float = 1e-12

    def __post_init__(self):
        arr = np.asarray(self.entries)
        if arr.ndim != 2:
            raise ValueError("contraction entries must be a 2-d array")
        dtype = np.complex128 if np.iscomplexobj(arr) else np.float64
        arr = arr.astype(dtype, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        norm = operator_norm(arr)
        if norm > 1.0 + self.norm_tol:
            raise ValueError(f"operator norm {norm:.12f} exceeds 1")

    @property
    def source_dim(self) -> int:
        return self.entries.shape[1]

    @property
    def target_dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_isometry(self) -> bool:
        w = self.entries
        gram = w.conj().T @ w
        return operator_norm(gram - np.eye(self.source_dim)) <= 1e-12

    def __array__(self, dtype=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


# ---------------------------------------------------------------------------
# spectral kernels
# ---------------------------------------------------------------------------

def sym_eig(a):
    """Eigendecomposition of a self-adjoint matrix.

    Returns ``(eigenvalues, basis)`` with eigenvalues ascending and
    ``basis @ diag(eigenvalues) @ basis*  == A`` to 1e-12 * ||A||;
    the basis is orthogonal (unitary in the complex case) to 1e-12.
    """
    m = _as_array(_sym(a))
    vals, vecs = np.linalg.eigh(m)
    return vals, vecs


def _psd_check(vals: np.ndarray, tol: float, what: str) -> None:
    lo = float(vals[0])
    hi = float(vals[-1])
    if lo < -tol * max(1.0, abs(hi)):
        raise NotPositiveSemidefinite(
            f"{what}: eigenvalue {lo:.3e} below -{tol:.1e} * max(1, {hi:.3e})"
        )


def loewner_leq(a, b, tol: float = DEFAULT_PSD_TOL) -> bool:
    """Loewner order predicate: A <= B up to a relative tolerance.

    True iff ``lambda_min(B - A) >= -tol * max(1, ||A||, ||B||)``.
    """
    am, bm = _as_array(_sym(a)), _as_array(_sym(b))
    if am.shape != bm.shape:
        raise DimensionMismatch(f"shapes {am.shape} and {bm.shape} differ")
    diff_min = float(np.linalg.eigvalsh(bm - am)[0])
    vals_a = np.linalg.eigvalsh(am)
    vals_b = np.linalg.eigvalsh(bm)
    scale = max(1.0, abs(vals_a[0]), abs(vals_a[-1]), abs(vals_b[0]), abs(vals_b[-1]))
    return diff_min >= -tol * scale


def _joint_basis(arrays, residual_tol: float = 1e-8):
    """Orthogonal basis jointly diagonalizing a commuting family.

    Diagonalizes a generic random combination and reuses its basis; a second
    combination is tried if the off-diagonal residual exceeds tolerance.
    The combination coefficients come from a fixed-seed generator so the
    result is a pure function of the input.
    """
    k = len(arrays)
    n = arrays[0].shape[0]
    rng = np.random.default_rng(0x1DEA)
    scale = max(max(operator_norm(x) for x in arrays), 1e-300)
    for _ in range(2):
        c = rng.standard_normal(k)
        combo = sum(ci * x for ci, x in zip(c, arrays))
        combo = (combo + combo.conj().T) / 2.0
        _, basis = np.linalg.eigh(combo)
        worst = 0.0
        for x in arrays:
            rot = basis.conj().T @ x @ basis
            off = rot - np.diag(np.diag(rot))
            worst = max(worst, operator_norm(off))
        if worst <= residual_tol * scale:
            return basis
    raise CommutationError(
        f"joint diagonalization residual {worst:.3e} exceeds "
        f"{residual_tol:.1e} * scale; tuple does not commute within tolerance"
    )


def apply_scalar_function(f, x, residual_tol: float = 1e-8) -> SymMatrix:
    """Functional calculus f(X) on a commuting tuple through joint diagonalization.

    ``f`` takes k scalar arguments (k = tuple arity); for k = 1 this is the
    standard functional calculus.  Raises CommutationError when the tuple does
    not commute within tolerance and ValueError when f is undefined (non-finite)
    at a joint eigenvalue.
    """
    xt = as_tuple(x)
    arrays = xt.arrays()
    n = xt.n
    if xt.k == 1:
        lam, basis = np.linalg.eigh(arrays[0])
        joint = [lam]
    else:
        basis = _joint_basis(arrays, residual_tol)
        joint = [np.real(np.diag(basis.conj().T @ a @ basis)) for a in arrays]
    # non-finite values become a ValueError below, so silence numpy here
    with np.errstate(invalid="ignore", divide="ignore"):
        try:
            vals = np.asarray(f(*joint), dtype=float)
            if vals.shape != (n,):
                raise TypeError
        except TypeError:
            vals = np.array([float(f(*(col[j] for col in joint))) for j in range(n)])
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        point = tuple(float(col[bad]) for col in joint)
        raise ValueError(f"function undefined at joint eigenvalue {point}")
    return SymMatrix(basis @ np.diag(vals) @ basis.conj().T)


def psd_sqrt(a, tol: float = DEFAULT_PSD_TOL) -> SymMatrix:
    """Principal square root of a PSD matrix (negative roundoff clamped to 0)."""
    m = _as_array(_sym(a))
    vals, vecs = np.linalg.eigh(m)
    _psd_check(vals, tol, "psd_sqrt")
    root = np.sqrt(np.clip(vals, 0.0, None))
    return SymMatrix(vecs @ np.diag(root) @ vecs.conj().T)


def pinv_psd(a, rank_tol: float = 1e-12, tol: float = DEFAULT_PSD_TOL) -> SymMatrix:
    """Moore-Penrose inverse of a PSD matrix.

    Eigenvalues below ``rank_tol * lambda_max`` are treated as exact zeros.
    """
    m = _as_array(_sym(a))
    vals, vecs = np.linalg.eigh(m)
    _psd_check(vals, tol, "pinv_psd")
    cut = rank_tol * max(float(vals[-1]), 0.0)
    inv = np.where(vals > cut, 1.0 / np.where(vals > cut, vals, 1.0), 0.0)
    return SymMatrix(vecs @ np.diag(inv) @ vecs.conj().T)


def unitary_dilation(w, tol: float = 1e-8) -> np.ndarray:
    """Unitary dilation ``[[W, (I-WW*)^1/2], [(I-W*W)^1/2, -W*]]`` of a contraction.

    The result is a square unitary of size (target + source); unitarity holds
    to 1e-10 for any W with ||W|| <= 1.  Both defect square roots are built
    from one SVD of W so their cross terms cancel to roundoff (eigenvalue
    clamping alone would leave sqrt(eps)-sized unitarity defects).
    """
    wm = _as_array(w)
    norm = operator_norm(wm)
    if norm > 1.0 + tol:
        raise ValueError(f"not a contraction: operator norm {norm:.6f} > 1")
    m, n = wm.shape
    p, sigma, qh = np.linalg.svd(wm, full_matrices=True)
    defect = np.sqrt(np.clip(1.0 - np.clip(sigma, 0.0, 1.0) ** 2, 0.0, None))
    dl = np.ones(m)
    dl[: defect.shape[0]] = defect
    dr = np.ones(n)
    dr[: defect.shape[0]] = defect
    defect_left = (p * dl) @ p.conj().T
    defect_right = (qh.conj().T * dr) @ qh
    top = np.hstack([wm, defect_left])
    bottom = np.hstack([defect_right, -wm.conj().T])
    return np.vstack([top, bottom])


# ---------------------------------------------------------------------------
# seeded generators
# ---------------------------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    # sign fix makes the distribution Haar and the output deterministic
    return q * np.sign(np.diag(r))


def random_pd(n: int, interval=(0.1, 10.0), seed=0) -> SymMatrix:
    """Random PD matrix with spectrum drawn uniformly from ``interval``."""
    lo, hi = interval
    if not (0.0 < lo <= hi):
        raise ValueError("spectrum interval must satisfy 0 < lo <= hi")
    rng = _rng(seed)
    q = _haar_orthogonal(n, rng)
    lam = rng.uniform(lo, hi, n)
    return SymMatrix(q @ np.diag(lam) @ q.T)


def random_commuting_tuple(k: int, n: int, interval=(0.1, 10.0), seed=0) -> MatrixTuple:
    """Commuting PD tuple: one shared random orthogonal basis, independent spectra."""
    lo, hi = interval
    if not (0.0 < lo <= hi):
        raise ValueError("spectrum interval must satisfy 0 < lo <= hi")
    rng = _rng(seed)
    q = _haar_orthogonal(n, rng)
    items = []
    for _ in range(k):
        lam = rng.uniform(lo, hi, n)
        items.append(SymMatrix(q @ np.diag(lam) @ q.T))
    return MatrixTuple(tuple(items), commuting=True)


def make_dominated_pair(x: MatrixTuple, y: MatrixTuple, margin: float = 0.05):
    """Shift X down coordinatewise so that X' <= Y strictly, staying positive.

    ``X'_i = X_i - t_i I`` with ``t_i = max(0, lambda_max(X_i - Y_i)) + margin``.
    Scalar shifts preserve commutation certificates.  If any X'_i leaves the
    positive cone, one common positive shift is added to both sides of every
    coordinate, which preserves the order.
    """
    xt, yt = as_tuple(x), as_tuple(y)
    if xt.k != yt.k or xt.n != yt.n:
        raise DimensionMismatch("tuples must share arity and dimension")
    shifted = []
    eye = np.eye(xt.n)
    for xi, yi in zip(xt.items, yt.items):
        t = max(0.0, float(np.linalg.eigvalsh(xi.entries - yi.entries)[-1])) + margin
        shifted.append(xi.entries - t * eye)
    floor = min(float(np.linalg.eigvalsh(s)[0]) for s in shifted)
    y_arrays = [yi.entries for yi in yt.items]
    if floor <= 0.0:
        lift = margin - floor
        shifted = [s + lift * eye for s in shifted]
        y_arrays = [yi + lift * eye for yi in y_arrays]
    x_out = MatrixTuple(tuple(shifted), commuting=xt.commuting, commute_tol=xt.commute_tol)
    y_out = MatrixTuple(tuple(y_arrays), commuting=yt.commuting, commute_tol=yt.commute_tol)
    return x_out, y_out


def random_isometry(n: int, m: int, seed=0) -> Contraction:
    """Random isometry C^n -> C^m (m >= n), W*W = I to 1e-12."""
    if m < n:
        raise ValueError(f"isometry needs target dim >= source dim, got {m} < {n}")
    rng = _rng(seed)
    g = rng.standard_normal((m, n))
    q, r = np.linalg.qr(g)
    return Contraction(q * np.sign(np.diag(r)))


def random_contraction(n: int, m: int, seed=0) -> Contraction:
    """Random strict contraction C^n -> C^m via norm rescaling."""
    rng = _rng(seed)
    g = rng.standard_normal((m, n))
    target = rng.uniform(0.1, 1.0)
    return Contraction(g * (target / max(operator_norm(g), 1e-300)))


# ---------------------------------------------------------------------------
# structural helpers shared by the suites
# ---------------------------------------------------------------------------

def direct_sum(a, b) -> SymMatrix:
    am, bm = _as_array(_sym(a)), _as_array(_sym(b))
    dtype = np.result_type(am, bm)
    out = np.zeros((am.shape[0] + bm.shape[0],) * 2, dtype=dtype)
    out[: am.shape[0], : am.shape[0]] = am
    out[am.shape[0] :, am.shape[0] :] = bm
    return SymMatrix(out)


def tuple_direct_sum(x: MatrixTuple, y: MatrixTuple) -> MatrixTuple:
    xt, yt = as_tuple(x), as_tuple(y)
    if xt.k != yt.k:
        raise DimensionMismatch("tuples must share arity")
    return MatrixTuple(tuple(direct_sum(a, b) for a, b in zip(xt.items, yt.items)))


def tuple_compress(x: MatrixTuple, w) -> MatrixTuple:
    """Coordinatewise compression W* X_i W."""
    xt = as_tuple(x)
    wm = _as_array(w)
    if wm.shape[0] != xt.n:
        raise DimensionMismatch(f"map has {wm.shape[0]} rows, tuple dimension is {xt.n}")
    return MatrixTuple(tuple(wm.conj().T @ xi.entries @ wm for xi in xt.items))
