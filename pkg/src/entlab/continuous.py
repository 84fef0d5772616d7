"""Continuous-time entangled averages for matrix semigroups T(s) = exp(sB).

The discrete lattice mean is replaced by (1/t^k) times an iterated integral
over [0, t]^k, approximated on a shared one-dimensional quadrature grid: all
positions driven by the same block read the semigroup at the same node.  The
limit object mirrors the discrete one with the unit circle traded for the
imaginary axis: eigenvalues 2*pi*i*phi with real frequency phi, and the block
constraint "product equals one" traded for "frequencies sum to zero exactly"
(resonance for every t, not only t in a lattice).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import linalg
from .entangle import Partition, lattice_chain_mean, make_partition, MEMORY_CAP_BYTES
from .errors import (
    BudgetExceededError,
    DimensionMismatchError,
    NotBoundedSemigroupError,
    ValidationError,
)
from .operators import Certificate, _basis_pair
from .spectral_limit import resonant_tuples
from . import operators as _ops

TWO_PI = 2.0 * np.pi
AXIS_BAND = 1e-8  # |Re lambda| below this counts as on the imaginary axis


@dataclass(frozen=True)
class FrequencyPoint:
    """One imaginary-axis eigenvalue 2*pi*i*frequency of a generator."""

    frequency: float
    multiplicity: int
    exact: Fraction | None = None


@dataclass(eq=False)
class Semigroup:
    """Generator plus spectral bookkeeping.  Treat instances as immutable."""

    generator: np.ndarray
    certificate: Certificate | None
    growth_bound_estimate: float
    frequency_points: tuple[FrequencyPoint, ...]

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    def value(self, t) -> np.ndarray:
        """T(t) = exp(tB); t may be a scalar or a 1-D array of times."""
        return linalg.expm(self.generator, t)

    @cached_property
    def spectral_verdict(self) -> tuple[bool, str | None]:
        """(ok, reason): spectrum in the closed left half-plane, axis part semisimple."""
        if self.certificate is not None:
            return True, None
        dec = linalg.eig(self.generator)
        worst = float(np.max(dec.values.real)) if dec.values.size else 0.0
        if worst > AXIS_BAND:
            return False, f"spectral abscissa {worst:.6e} in the right half-plane"
        for center, members in linalg.cluster_eigenvalues(dec.values, 1e-6):
            if abs(center.real) > AXIS_BAND or members.size == 1:
                continue
            spread = float(np.max(np.abs(dec.values[members] - center)))
            scale = max(1.0, float(np.linalg.norm(self.generator)))
            zero_tol = max(1e-8, 10.0 * spread) * scale
            s = np.linalg.svd(
                self.generator - center * np.eye(self.dim), compute_uv=False
            )
            geo = self.dim - int(np.count_nonzero(s > zero_tol))
            if geo < members.size:
                return False, "defective eigenvalue cluster on the imaginary axis"
        return True, None


def synth_semigroup(frequencies, stable, basis) -> Semigroup:
    """Generator with exact imaginary-axis eigenvalues 2*pi*i*phi.

    frequencies : exact rational cycles per unit time (Fraction / 'p/q' /
        int / (p, q)); unlike circle angles these are NOT reduced mod 1,
        since e^{2 pi i phi t} distinguishes phi and phi + 1 for real t.
    stable : complex numbers with strictly negative real part.
    basis : OrthonormalBasis or RandomSimilarity.
    """
    exacts = tuple(_parse_frequency(f) for f in frequencies)
    stable_vals = tuple(complex(s) for s in stable)
    for s in stable_vals:
        if s.real >= 0.0:
            raise ValidationError(
                f"stable generator eigenvalue {s!r} must have Re < 0"
            )
    dim = len(exacts) + len(stable_vals)
    if dim == 0:
        raise DimensionMismatchError("generator needs at least one eigenvalue")
    if dim > linalg.DIM_CAP:
        raise DimensionMismatchError(f"dimension {dim} exceeds cap {linalg.DIM_CAP}")
    eigs = np.array(
        [TWO_PI * 1j * float(f) for f in exacts] + list(stable_vals),
        dtype=np.complex128,
    )
    s, s_inv = _basis_pair(basis, dim)
    gen = (s * eigs[np.newaxis, :]) @ s_inv
    sv = np.linalg.svd(s, compute_uv=False)
    bound = float(sv[0] / sv[-1])
    counts: dict[Fraction, int] = {}
    for f in exacts:
        counts[f] = counts.get(f, 0) + 1
    points = tuple(
        FrequencyPoint(float(f), mult, f) for f, mult in sorted(counts.items())
    )
    cert = Certificate(s, eigs, s_inv, exacts)
    return Semigroup(gen, cert, bound, points)


def _parse_frequency(f) -> Fraction:
    if isinstance(f, bool):
        raise ValidationError(f"not a frequency: {f!r}")
    if isinstance(f, Fraction):
        return f
    if isinstance(f, int):
        return Fraction(f)
    if isinstance(f, str):
        try:
            return Fraction(f.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse frequency {f!r}") from exc
    if isinstance(f, tuple) and len(f) == 2:
        return Fraction(int(f[0]), int(f[1]))
    raise ValidationError(
        f"frequency {f!r} must be an exact rational (float rejected)"
    )


def semigroup_from_generator(
    b, tol: float = 1e-9, axis_band: float = AXIS_BAND
) -> Semigroup:
    """Wrap a raw generator; frequencies are read off the eigensolver."""
    arr = linalg.as_matrix(b, square=True, name="generator")
    dec = linalg.eig(arr, tol)
    points = []
    for center, members in linalg.cluster_eigenvalues(dec.values, 1e-8):
        if abs(center.real) <= axis_band:
            points.append(
                FrequencyPoint(float(center.imag / TWO_PI), int(members.size), None)
            )
    points.sort(key=lambda p: p.frequency)
    worst = float(np.max(dec.values.real)) if dec.values.size else 0.0
    if worst <= AXIS_BAND and np.isfinite(dec.condition_estimate):
        bound = float(dec.condition_estimate)
    else:
        bound = float("inf")
    return Semigroup(arr, None, bound, tuple(points))


def as_semigroup(b) -> Semigroup:
    if isinstance(b, Semigroup):
        return b
    return semigroup_from_generator(b)


@dataclass(frozen=True)
class BoundedSemigroupReport:
    passed: bool
    bound: float
    measured_max: float
    reason: str | None = None


def certify_bounded_semigroup(sg, t_probe=(0.5, 1.0, 2.0, 4.0, 8.0, 16.0)) -> BoundedSemigroupReport:
    """Spectral certificate plus measured ||T(t)|| on a probe grid.

    passed is the spectral criterion (closed left half-plane, semisimple
    imaginary-axis clusters); bound is the certified sup when a
    diagonalization is available, else the measured maximum.
    """
    sg = as_semigroup(sg)
    ok, reason = sg.spectral_verdict
    measured = 0.0
    for t in t_probe:
        measured = max(measured, linalg.spectral_norm(sg.value(float(t))))
    if not ok:
        return BoundedSemigroupReport(False, float("inf"), measured, reason)
    bound = sg.growth_bound_estimate
    if not np.isfinite(bound):
        bound = measured
    return BoundedSemigroupReport(True, float(max(bound, measured)), measured, None)


def frequency_spectrum(sg, tol: float = AXIS_BAND) -> tuple[FrequencyPoint, ...]:
    """Imaginary-axis frequencies of the generator, exact when synthesized.

    tol widens the band around the axis when reading a raw generator; a
    Semigroup answers from its stored bookkeeping.  Fails the
    bounded-semigroup certificate loudly instead of reporting frequencies of
    a blowing-up semigroup.
    """
    if not isinstance(sg, Semigroup):
        sg = semigroup_from_generator(sg, axis_band=tol)
    ok, reason = sg.spectral_verdict
    if not ok:
        raise NotBoundedSemigroupError(reason)
    return sg.frequency_points


@dataclass(frozen=True)
class QuadratureSpec:
    """Shared 1-D grid on [0, t]: 'midpoint' or 'gauss-legendre', Q >= 2 points."""

    scheme: str = "midpoint"
    points: int = 64

    def nodes(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        if self.points < 2:
            raise ValidationError("need at least 2 quadrature points")
        if not (t > 0):
            raise ValidationError(f"horizon t must be positive, got {t!r}")
        q = int(self.points)
        if self.scheme == "midpoint":
            s = (np.arange(q) + 0.5) * (t / q)
            w = np.full(q, t / q)
            return s, w
        if self.scheme == "gauss-legendre":
            x, wx = np.polynomial.legendre.leggauss(q)
            return (x + 1.0) * (t / 2.0), wx * (t / 2.0)
        raise ValidationError(f"unknown quadrature scheme {self.scheme!r}")


@dataclass(frozen=True)
class ContinuousSystem:
    """Partition plus semigroups B_1..B_m and connectors A_1..A_{m-1}."""

    partition: Partition
    semigroups: tuple[Semigroup, ...]
    connectors: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return self.semigroups[0].dim


def make_continuous_system(alpha, generators, connectors=None) -> ContinuousSystem:
    part = alpha if isinstance(alpha, Partition) else make_partition(alpha)
    sgs = tuple(as_semigroup(b) for b in generators)
    if len(sgs) != part.m:
        raise DimensionMismatchError(
            f"partition has m={part.m} positions but {len(sgs)} generators given"
        )
    d = sgs[0].dim
    for sg in sgs:
        if sg.dim != d:
            raise DimensionMismatchError("generators must share one dimension")
    if connectors is None:
        conns = tuple(np.eye(d, dtype=np.complex128) for _ in range(part.m - 1))
    else:
        conns = tuple(
            linalg.as_matrix(c, square=True, name=f"connector[{i}]")
            for i, c in enumerate(connectors)
        )
    if len(conns) != part.m - 1:
        raise DimensionMismatchError(f"need {part.m - 1} connectors, got {len(conns)}")
    for c in conns:
        if c.shape != (d, d):
            raise DimensionMismatchError("connector dimension mismatch")
    return ContinuousSystem(part, sgs, conns)


@dataclass(frozen=True)
class ContinuousAverage:
    """Quadrature value plus a Richardson error estimate (None when skipped)."""

    value: np.ndarray
    error_estimate: float | None
    points: int


def _single_grid_average(system, t, quad: QuadratureSpec, x, budget):
    part = system.partition
    m, d = part.m, system.dim
    blocks = part.blocks
    q = quad.points
    singles = {a for a, pos in blocks.items() if len(pos) == 1}
    k_eff = len(blocks) - len(singles)
    # documented cost model: ~20 products per exponential node and operator,
    # plus one chain-step product per lattice point and position
    cost = 20.0 * m * q + float(q) ** k_eff * (2 * m - 1)
    if budget is not None and cost > budget:
        raise BudgetExceededError(
            f"estimated cost {cost:.3e} exceeds budget {budget:.3e} "
            f"(Q={q}, lattice axes={k_eff})"
        )
    distinct = {id(system.semigroups[j].generator) for j in range(m)}
    mem = len(distinct) * q * d * d * 16
    if mem > MEMORY_CAP_BYTES:
        raise BudgetExceededError(
            f"semigroup stacks would need {mem / 2**30:.2f} GiB"
        )

    s_nodes, w_nodes = quad.nodes(t)
    uniform = quad.scheme == "midpoint"
    stacks: dict[int, np.ndarray] = {}

    def stack_for(j: int) -> np.ndarray:
        key = id(system.semigroups[j].generator)
        if key not in stacks:
            stacks[key] = system.semigroups[j].value(s_nodes)
        return stacks[key]

    factors = []
    weights: dict[int, np.ndarray] = {}
    for j in range(m):
        a = part.alpha[j]
        if a in singles:
            st = stack_for(j)
            factors.append(("fixed", np.tensordot(w_nodes, st, axes=1) / t))
        else:
            factors.append(("stack", a, stack_for(j)))
            if not uniform:
                weights[a] = w_nodes / t
    return lattice_chain_mean(
        factors, list(system.connectors), q, x=x, weights=weights or None
    )


def continuous_entangled_average(
    system: ContinuousSystem,
    t: float,
    quad: QuadratureSpec = QuadratureSpec(),
    x=None,
    budget: float | None = 1e8,
    richardson: bool = True,
) -> ContinuousAverage:
    """(1/t^k) times the iterated integral of the semigroup chain over [0,t]^k.

    All positions sharing a block read their semigroup at the same node of
    one shared 1-D grid; each distinct generator is exponentiated once per
    grid (batched), and singleton blocks are pre-integrated so the lattice
    only runs over entangled axes.  With richardson=True the average is
    recomputed on a doubled grid and the difference reported as the error
    estimate for the returned (requested-Q) value; the doubled run roughly
    triples the cost.

    Sampling well below the fastest frequency aliases the oscillation; keep
    Q at 20 or more points per period (see suggest_points).
    """
    for j, sg in enumerate(system.semigroups):
        ok, reason = sg.spectral_verdict
        if not ok:
            raise NotBoundedSemigroupError(f"generator {j + 1}: {reason}")
    if x is not None:
        x = np.asarray(x, dtype=np.complex128)
        if x.shape != (system.dim,):
            raise DimensionMismatchError(
                f"state has shape {x.shape}, expected ({system.dim},)"
            )
    value = _single_grid_average(system, float(t), quad, x, budget)
    est = None
    if richardson:
        fine = QuadratureSpec(quad.scheme, 2 * quad.points)
        value2 = _single_grid_average(system, float(t), fine, x, budget)
        est = float(np.linalg.norm(value - value2))
    return ContinuousAverage(value, est, quad.points)


def suggest_points(system: ContinuousSystem, t: float, per_period: float = 20.0) -> int:
    """Grid size putting per_period nodes on the fastest spectral oscillation."""
    fmax = 0.0
    for sg in system.semigroups:
        for p in sg.frequency_points:
            fmax = max(fmax, abs(p.frequency))
    return max(2, int(np.ceil(per_period * t * fmax)))


def continuous_limit_operator(system: ContinuousSystem, tol: float = 1e-8) -> np.ndarray:
    """t -> infinity limit of the continuous entangled averages.

    Sum over additively resonant frequency tuples (each block's frequencies
    cancel exactly) of P_m A_{m-1} ... A_1 P_1 with P_j the spectral
    projection of B_j at 2*pi*i*phi_j.
    """
    freq_lists = []
    for j, sg in enumerate(system.semigroups):
        ok, reason = sg.spectral_verdict
        if not ok:
            raise NotBoundedSemigroupError(f"generator {j + 1}: {reason}")
        freq_lists.append(
            [
                (p.exact if p.exact is not None else p.frequency)
                for p in sg.frequency_points
            ]
        )
    tuples = resonant_tuples(
        freq_lists, system.partition, tol, additive=True
    )
    d = system.dim
    out = np.zeros((d, d), dtype=np.complex128)
    cache: dict = {}

    def proj(j: int, entry, fr):
        key = (j, fr if fr is not None else entry)
        if key in cache:
            return cache[key]
        sg = system.semigroups[j]
        if sg.certificate is not None and fr is not None:
            mask = np.array([a == fr for a in sg.certificate.angles] +
                            [False] * (d - len(sg.certificate.angles)))
            p = (sg.certificate.basis * mask[np.newaxis, :]) @ sg.certificate.basis_inv
        else:
            target = TWO_PI * 1j * (float(fr) if fr is not None else float(entry))
            band = 1e-8 * (1.0 + abs(target))
            p = _ops.schur_spectral_projection(
                sg.generator, lambda z: abs(z - target) <= band
            )
        cache[key] = p
        return p

    m = system.partition.m
    for tup in tuples:
        cur = proj(m - 1, tup.entries[m - 1], tup.exact[m - 1])
        for j in range(m - 2, -1, -1):
            cur = cur @ system.connectors[j] @ proj(j, tup.entries[j], tup.exact[j])
        out = out + cur
    return out
