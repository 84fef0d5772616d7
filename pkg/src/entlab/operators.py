"""Power-bounded operators with spectral bookkeeping.

A SpectralOperator is a square matrix plus optional exact provenance: when the
matrix was synthesized as S diag(unimodular, stable) S^{-1} the certificate
stores S, the eigenvalues and S^{-1}, and every unit-circle eigenvalue carries
an exact rational angle (a Fraction of a full turn).  Operators wrapped from a
raw matrix get a floating-point unimodular spectrum from the eigensolver and
no certificate.

Two routes exist for every spectral quantity on purpose: the certificate route
(exact diagonal bookkeeping) and the matrix route (Schur form with Sylvester
decoupling, or Cesaro partial means).  Tests compare them.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from . import linalg
from .errors import (
    DimensionMismatchError,
    BadAngleError,
    NotPowerBoundedError,
    NotUnimodularError,
    SpectralFailureError,
    ValidationError,
)
from .rng import CounterRng

UNIMOD_BAND = 1e-8   # distance from the unit circle that still counts as on it
CLUSTER_TOL = 1e-8   # eigenvalue matching tolerance for float spectra


def parse_angle(x) -> Fraction:
    """Exact angle as a Fraction of a full turn, normalized into [0, 1).

    Accepts Fraction, int, (p, q) pairs and 'p/q' strings.  Floats are
    rejected: an angle that is not exactly rational has no place in the
    resonance arithmetic, and silently rationalizing one would hide that.
    """
    if isinstance(x, bool):
        raise BadAngleError(f"not an angle: {x!r}")
    if isinstance(x, Fraction):
        fr = x
    elif isinstance(x, int):
        fr = Fraction(x)
    elif isinstance(x, float):
        raise BadAngleError(
            f"float angle {x!r} rejected; pass an exact rational like '1/3'"
        )
    elif isinstance(x, str):
        try:
            fr = Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise BadAngleError(f"cannot parse angle {x!r}") from exc
    elif isinstance(x, tuple) and len(x) == 2:
        try:
            fr = Fraction(int(x[0]), int(x[1]))
        except (ValueError, ZeroDivisionError) as exc:
            raise BadAngleError(f"cannot parse angle {x!r}") from exc
    else:
        raise BadAngleError(f"cannot parse angle {x!r}")
    return fr % 1


def angle_value(fr: Fraction) -> complex:
    """Unit-circle value e^{2 pi i fr}."""
    return cmath.exp(2j * cmath.pi * float(fr))


@dataclass(frozen=True)
class SpectralPoint:
    """One unimodular eigenvalue: float value, multiplicity, optional exact angle."""

    value: complex
    multiplicity: int
    angle: Fraction | None = None

    def key(self):
        """Deterministic sort key: exact angle when present, else phase."""
        if self.angle is not None:
            return (0, self.angle)
        phase = cmath.phase(self.value) / (2 * cmath.pi) % 1.0
        return (1, phase)


@dataclass(frozen=True)
class Certificate:
    """Exact diagonalization T = basis @ diag(eigenvalues) @ basis_inv."""

    basis: np.ndarray
    eigenvalues: np.ndarray
    basis_inv: np.ndarray
    angles: tuple = ()  # parallel to the unimodular prefix of eigenvalues


@dataclass(frozen=True)
class OrthonormalBasis:
    """Haar-unitary eigenbasis; the synthesized operator is normal."""

    seed: int


@dataclass(frozen=True)
class RandomSimilarity:
    """Eigenbasis I + scaled Gaussian, rescaled until cond_2 <= condition_cap."""

    seed: int
    condition_cap: float = 50.0


@dataclass(eq=False)
class SpectralOperator:
    """Matrix plus spectral bookkeeping.  Treat instances as immutable."""

    matrix: np.ndarray
    certificate: Certificate | None
    power_bound_estimate: float
    unimodular_spectrum: tuple[SpectralPoint, ...]

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def spectral_verdict(self) -> tuple[bool, str | None]:
        """(ok, reason): spectrum in the closed disk, unit-circle part semisimple."""
        if self.certificate is not None:
            # construction enforces |stable| < 1 and a diagonal form
            return True, None
        dec = linalg.eig(self.matrix)
        radius = float(np.max(np.abs(dec.values))) if dec.values.size else 0.0
        if radius > 1.0 + UNIMOD_BAND:
            return False, f"spectral radius {radius:.6e} outside the closed unit disk"
        if not dec.semisimple_unimodular:
            return False, "defective eigenvalue cluster on the unit circle"
        return True, None


def _basis_pair(spec, dim: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(spec, OrthonormalBasis):
        s = linalg.haar_unitary(dim, spec.seed)
        return s, s.conj().T
    if isinstance(spec, RandomSimilarity):
        rng = CounterRng(spec.seed)
        z = rng.complex_normal((dim, dim)) / np.sqrt(2.0 * dim)
        c = 1.0
        eye = np.eye(dim)
        for _ in range(60):
            s = eye + c * z
            sv = np.linalg.svd(s, compute_uv=False)
            if sv[-1] > 0 and sv[0] / sv[-1] <= spec.condition_cap:
                return s, np.linalg.solve(s, eye)
            c *= 0.5
        raise ValidationError("could not meet the similarity condition cap")
    raise ValidationError(f"unknown basis spec {spec!r}")


def synth_operator(angles, stable, basis) -> SpectralOperator:
    """Operator with exact unit-circle eigenvalues e^{2 pi i a} and stable part.

    angles : iterable of exact rational turns (see parse_angle).
    stable : iterable of complex numbers strictly inside the unit disk.
    basis  : OrthonormalBasis or RandomSimilarity.

    The certificate keeps S, S^{-1} and the eigenvalue list, unimodular part
    first, so downstream projections can be assembled exactly.
    """
    fr_angles = tuple(parse_angle(a) for a in angles)
    stable_vals = tuple(complex(s) for s in stable)
    for s in stable_vals:
        if abs(s) >= 1.0:
            raise ValidationError(f"stable eigenvalue {s!r} not inside the open disk")
    dim = len(fr_angles) + len(stable_vals)
    if dim == 0:
        raise DimensionMismatchError("operator needs at least one eigenvalue")
    if dim > linalg.DIM_CAP:
        raise DimensionMismatchError(f"dimension {dim} exceeds cap {linalg.DIM_CAP}")

    eigs = np.array(
        [angle_value(a) for a in fr_angles] + list(stable_vals), dtype=np.complex128
    )
    s, s_inv = _basis_pair(basis, dim)
    matrix = (s * eigs[np.newaxis, :]) @ s_inv

    sv = np.linalg.svd(s, compute_uv=False)
    bound = float(sv[0] / sv[-1])

    counts: dict[Fraction, int] = {}
    for a in fr_angles:
        counts[a] = counts.get(a, 0) + 1
    points = tuple(
        SpectralPoint(angle_value(a), mult, a) for a, mult in sorted(counts.items())
    )
    cert = Certificate(s, eigs, s_inv, fr_angles)
    return SpectralOperator(matrix, cert, bound, points)


def from_matrix(a, tol: float = 1e-9) -> SpectralOperator:
    """Wrap a raw matrix; the unimodular spectrum is read off the eigensolver.

    Eigenvalues within CLUSTER_TOL of each other are merged; a cluster counts
    as unimodular when its center is within UNIMOD_BAND of the circle.  No
    certificate is attached, so downstream exact-angle arithmetic is
    unavailable and projections go through the Schur route.
    """
    arr = linalg.as_matrix(a, square=True)
    dec = linalg.eig(arr, tol)
    points = []
    for center, members in linalg.cluster_eigenvalues(dec.values, CLUSTER_TOL):
        if abs(abs(center) - 1.0) <= UNIMOD_BAND:
            points.append(SpectralPoint(center, int(members.size), None))
    points.sort(key=SpectralPoint.key)
    radius = float(np.max(np.abs(dec.values)))
    if radius <= 1.0 + UNIMOD_BAND and np.isfinite(dec.condition_estimate):
        bound = float(dec.condition_estimate)
    else:
        bound = float("inf")
    return SpectralOperator(arr, None, bound, tuple(points))


def as_operator(t) -> SpectralOperator:
    """Coerce a matrix-like or SpectralOperator into a SpectralOperator."""
    if isinstance(t, SpectralOperator):
        return t
    return from_matrix(t)


@dataclass(frozen=True)
class PowerBoundReport:
    passed: bool
    bound: float
    measured_max: float
    reason: str | None = None


def certify_power_bounded(op, n_max: int = 64) -> PowerBoundReport:
    """Spectral certificate plus a measured sweep of ||T^n|| for n <= n_max.

    passed reflects the spectral criterion only (closed unit disk, semisimple
    unit-circle clusters); the sweep is evidence, reported as measured_max.
    bound is a certified sup_n ||T^n|| when a diagonalization is available
    (the basis condition number), otherwise the measured maximum.
    """
    op = as_operator(op)
    ok, reason = op.spectral_verdict
    power = np.eye(op.dim, dtype=np.complex128)
    measured = 0.0
    for _ in range(n_max):
        power = op.matrix @ power
        measured = max(measured, linalg.spectral_norm(power))
    if not ok:
        return PowerBoundReport(False, float("inf"), measured, reason)
    bound = op.power_bound_estimate
    if not np.isfinite(bound):
        bound = measured
    return PowerBoundReport(True, float(max(bound, measured)), measured, None)


def schur_spectral_projection(a, select) -> np.ndarray:
    """Spectral projection onto the invariant subspace of selected eigenvalues.

    Sorted complex Schur form puts the selected cluster in the leading block
    T11; the coupling Y solves the Sylvester equation T11 Y - Y T22 = T12 and
    the projection is Z [[I, Y], [0, 0]] Z^H.  Raises SpectralFailureError
    when the selected and complementary clusters are too close to decouple.
    """
    arr = linalg.as_matrix(a, square=True)
    d = arr.shape[0]

    def pred(z):
        return bool(select(complex(z)))

    t, z, sdim = sla.schur(arr, output="complex", sort=pred)
    k = int(sdim)
    if k == 0:
        return np.zeros((d, d), dtype=np.complex128)
    if k == d:
        return np.eye(d, dtype=np.complex128)
    t11, t12, t22 = t[:k, :k], t[:k, k:], t[k:, k:]
    inside = np.diagonal(t11)
    outside = np.diagonal(t22)
    gap = float(np.min(np.abs(inside[:, None] - outside[None, :])))
    if gap < 1e-10:
        raise SpectralFailureError(
            f"eigenvalue clusters separated by only {gap:.3e}; projection unstable"
        )
    try:
        y = sla.solve_sylvester(t11, -t22, t12)
    except np.linalg.LinAlgError as exc:
        raise SpectralFailureError(f"Sylvester decoupling failed: {exc}") from exc
    top = np.hstack([np.eye(k, dtype=np.complex128), y])
    p = z[:, :k] @ top @ z.conj().T
    return p


@dataclass(frozen=True)
class JdlSplit:
    """Reversible/stable splitting: p_r + p_s = I, ranges are T-invariant."""

    p_r: np.ndarray
    p_s: np.ndarray


def jdl_split(op, tol: float = 1e-9) -> JdlSplit:
    """Projection pair separating unit-circle eigenspace from the stable rest.

    Requires the power-boundedness certificate; in finite dimension the stable
    range then carries ||T^n p_s|| -> 0 geometrically while T restricted to
    the reversible range is similar to a diagonal unitary.
    """
    op = as_operator(op)
    ok, reason = op.spectral_verdict
    if not ok:
        raise NotPowerBoundedError(reason)
    if op.certificate is not None:
        mask = (np.abs(np.abs(op.certificate.eigenvalues) - 1.0) <= UNIMOD_BAND)
        p_r = (op.certificate.basis * mask[np.newaxis, :]) @ op.certificate.basis_inv
    elif not op.unimodular_spectrum:
        p_r = np.zeros((op.dim, op.dim), dtype=np.complex128)
    else:
        p_r = schur_spectral_projection(
            op.matrix, lambda lam: abs(lam) >= 1.0 - UNIMOD_BAND
        )
    return JdlSplit(p_r, np.eye(op.dim, dtype=np.complex128) - p_r)


def _parse_target(lam) -> tuple[complex, Fraction | None]:
    if isinstance(lam, (Fraction, str)) or (
        isinstance(lam, tuple) and len(lam) == 2
    ) or isinstance(lam, int):
        fr = parse_angle(lam)
        return angle_value(fr), fr
    val = complex(lam)
    if abs(abs(val) - 1.0) > UNIMOD_BAND:
        raise NotUnimodularError(f"|lambda| = {abs(val):.6e} is not 1")
    return val, None


def mean_ergodic_projection(op, lam, mode: str = "spectral", n: int | None = None):
    """Projection onto ker(T - lambda) along ran(T - lambda).

    lam may be a complex number on the unit circle or an exact angle (Fraction,
    'p/q' string, (p, q) tuple, int).  mode 'spectral' assembles the projection
    from the certificate or the Schur route and is exact up to linear algebra;
    mode 'cesaro' returns the partial mean (1/n) sum_{j=1..n} (conj(lambda) T)^j,
    which converges to the same projection at rate O(1/n) and is kept as the
    independent route for tests.  Off-spectrum lam gives the zero matrix.
    """
    op = as_operator(op)
    value, fr = _parse_target(lam)

    if mode == "cesaro":
        if n is None or n < 1:
            raise ValidationError("cesaro mode needs a depth n >= 1")
        ok, reason = op.spectral_verdict
        if not ok:
            raise NotPowerBoundedError(reason)
        m = np.conj(value) * op.matrix
        # Horner form of sum_{j=1..n} M^j without storing powers
        g = m.copy()
        eye = np.eye(op.dim, dtype=np.complex128)
        for _ in range(n - 1):
            g = m @ (g + eye)
        return g / n
    if mode != "spectral":
        raise ValidationError(f"unknown mode {mode!r}")

    if op.certificate is not None:
        eigs = op.certificate.eigenvalues
        if fr is not None and op.certificate.angles:
            mask = np.zeros(eigs.size, dtype=bool)
            for i, a in enumerate(op.certificate.angles):
                mask[i] = a == fr
        else:
            mask = np.abs(eigs - value) <= CLUSTER_TOL
        if not np.any(mask):
            return np.zeros((op.dim, op.dim), dtype=np.complex128)
        return (op.certificate.basis * mask[np.newaxis, :]) @ op.certificate.basis_inv

    hit = any(
        abs(p.value - value) <= CLUSTER_TOL for p in op.unimodular_spectrum
    )
    if not hit:
        return np.zeros((op.dim, op.dim), dtype=np.complex128)
    return schur_spectral_projection(
        op.matrix, lambda z: abs(z - value) <= CLUSTER_TOL
    )
