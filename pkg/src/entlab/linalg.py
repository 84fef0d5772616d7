"""Dense linear-algebra kernels the rest of the package builds on.

Eigendecomposition and the matrix exponential delegate to LAPACK/SciPy behind
small wrappers that add validation, residual checks and error mapping.  The
spectral norm is a self-contained power iteration with a deterministic seeded
start; tests compare it against the SVD route.  Haar unitaries come from QR of
a complex Gaussian matrix with the usual phase fix on the diagonal of R.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatchError, NonConvergenceError
from .rng import CounterRng

# Dense eig above this size is slow enough to be a foot-gun in an interactive
# laboratory; everything in the package validates against it.
DIM_CAP = 512

# Refuse matrix exponentials whose scaled 1-norm would push Pade scaling and
# squaring past ~17 squarings of headroom; exp overflows double range anyway
# near ||tB|| ~ 700 for non-normal B, so the cap is generous.
EXPM_NORM_CAP = 1.0e5

_POWER_ITER_SEED = 0xA3C59  # arbitrary fixed constant, documented as such


def as_matrix(a, *, square: bool = False, name: str = "matrix") -> np.ndarray:
    """Validate and convert to a complex128 2-D array.

    Raises DimensionMismatchError for wrong rank, empty or non-square (when
    required) input, and for non-finite entries.
    """
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.size == 0:
        raise DimensionMismatchError(f"{name} must be nonempty")
    if square and arr.shape[0] != arr.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got {arr.shape}")
    if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
        raise DimensionMismatchError(f"{name} has non-finite entries")
    if max(arr.shape) > DIM_CAP:
        raise DimensionMismatchError(
            f"{name} dimension {max(arr.shape)} exceeds cap {DIM_CAP}"
        )
    return arr


@dataclass(frozen=True)
class EigDecomposition:
    """Right eigendecomposition with diagnostics.

    values : (d,) complex eigenvalues, repeated to algebraic multiplicity.
    right_vectors : (d, d) columns are unit-norm right eigenvectors.
    condition_estimate : 2-norm condition of the eigenvector matrix
        (np.inf when it is singular to working precision).
    semisimple_unimodular : True when every eigenvalue cluster on the unit
        circle has geometric multiplicity equal to its algebraic multiplicity.
    """

    values: np.ndarray
    right_vectors: np.ndarray
    condition_estimate: float
    semisimple_unimodular: bool


def cluster_eigenvalues(values, tol: float = 1e-8):
    """Group eigenvalues by single-linkage at distance tol.

    Returns a list of (center, indices) with center the mean of the cluster,
    sorted by (real, imag) of the center for determinism.
    """
    vals = np.asarray(values, dtype=np.complex128)
    n = vals.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(vals[i] - vals[j]) <= tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = []
    for idx in groups.values():
        members = np.array(idx, dtype=np.intp)
        out.append((complex(vals[members].mean()), members))
    out.sort(key=lambda t: (t[0].real, t[0].imag))
    return out


def _workspace_rank(a: np.ndarray, zero_tol: float) -> int:
    s = np.linalg.svd(a, compute_uv=False)
    return int(np.count_nonzero(s > zero_tol))


def eig(a, tol: float = 1e-9, *, unimod_band: float = 1e-8) -> EigDecomposition:
    """Eigendecomposition with a residual check and a semisimplicity verdict.

    The residual guarantee is ||A v_i - lambda_i v_i||_2 <= tol * ||A||_F for
    every returned pair; LAPACK failure or a residual above the bound raises
    NonConvergenceError.  Semisimplicity is decided per unit-circle cluster by
    comparing the cluster size with d - rank(A - center*I); clusters are formed
    at a coarser tolerance (1e-6) than the residual check because defective
    eigenvalues split at the sqrt-of-eps scale.
    """
    arr = as_matrix(a, square=True)
    d = arr.shape[0]
    try:
        values, vectors = np.linalg.eig(arr)
    except np.linalg.LinAlgError as exc:
        raise NonConvergenceError(f"eigensolver failed: {exc}") from exc

    scale = float(np.linalg.norm(arr))
    if scale > 0.0:
        resid = arr @ vectors - vectors * values[np.newaxis, :]
        worst = float(np.max(np.linalg.norm(resid, axis=0)))
        if worst > tol * scale:
            raise NonConvergenceError(
                f"eigenpair residual {worst:.3e} exceeds {tol:.1e} * ||A||"
            )

    sv = np.linalg.svd(vectors, compute_uv=False)
    cond = float("inf") if sv[-1] == 0.0 else float(sv[0] / sv[-1])

    semisimple = True
    for center, members in cluster_eigenvalues(values, tol=1e-6):
        if abs(abs(center) - 1.0) > unimod_band:
            continue
        alg = members.size
        if alg == 1:
            continue
        spread = float(np.max(np.abs(values[members] - center)))
        zero_tol = max(1e-8, 10.0 * spread) * max(1.0, scale)
        geo = d - _workspace_rank(arr - center * np.eye(d), zero_tol)
        if geo < alg:
            semisimple = False
            break
    return EigDecomposition(values, vectors, cond, semisimple)


def expm(b, t=1.0) -> np.ndarray:
    """exp(t*B) by SciPy's Pade scaling-and-squaring.

    t may be a scalar or a 1-D array of times; the array form returns a
    (len(t), d, d) stack evaluated in one batched call.  Inputs whose scaled
    1-norm max|t| * ||B||_1 exceeds EXPM_NORM_CAP raise OverflowError.
    """
    arr = as_matrix(b, square=True)
    ts = np.asarray(t, dtype=np.float64)
    if ts.ndim > 1:
        raise DimensionMismatchError("t must be a scalar or 1-D array")
    norm1 = float(np.linalg.norm(arr, 1))
    worst = float(np.max(np.abs(ts))) if ts.size else 0.0
    if worst * norm1 > EXPM_NORM_CAP:
        raise OverflowError(
            f"||t*B||_1 = {worst * norm1:.3e} exceeds cap {EXPM_NORM_CAP:.1e}"
        )
    if ts.ndim == 0:
        return sla.expm(float(ts) * arr)
    if ts.size == 0:
        return np.zeros((0,) + arr.shape, dtype=np.complex128)
    return sla.expm(ts[:, np.newaxis, np.newaxis] * arr[np.newaxis, :, :])


def spectral_norm(a, tol: float = 1e-10, max_iter: int = 2000) -> float:
    """Largest singular value by power iteration on A^H A.

    The starting vector is drawn from a fixed-seed CounterRng, so repeated
    calls are bit-identical.  Convergence is declared when successive Rayleigh
    quotients of A^H A agree to tol * max(1, current); running out of
    iterations raises NonConvergenceError.
    """
    arr = as_matrix(a)
    m = arr.conj().T @ arr
    d = m.shape[0]
    rng = CounterRng(_POWER_ITER_SEED + d)
    v = rng.complex_normal((d,))
    nv = np.linalg.norm(v)
    if nv == 0.0:  # cannot happen with Box-Muller output, kept for safety
        v = np.ones(d, dtype=np.complex128)
        nv = np.sqrt(d)
    v = v / nv
    prev = -1.0
    for _ in range(max_iter):
        w = m @ v
        rq = float(np.real(np.vdot(v, w)))
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(rq - prev) <= tol * max(1.0, abs(rq)):
            return float(np.sqrt(max(rq, 0.0)))
        prev = rq
    raise NonConvergenceError(
        f"power iteration did not stabilize in {max_iter} iterations"
    )


def haar_unitary(dim: int, seed: int) -> np.ndarray:
    """Haar-distributed unitary of size dim, deterministic in seed.

    QR of a standard complex Gaussian matrix, with each column of Q rotated by
    the phase of the matching diagonal entry of R so the distribution is
    exactly Haar rather than QR-convention dependent.
    """
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise DimensionMismatchError(f"dim must be a positive integer, got {dim!r}")
    if dim > DIM_CAP:
        raise DimensionMismatchError(f"dim {dim} exceeds cap {DIM_CAP}")
    rng = CounterRng(seed)
    z = rng.complex_normal((dim, dim)) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r).copy()
    diag[diag == 0] = 1.0
    return q * (diag / np.abs(diag))[np.newaxis, :]
