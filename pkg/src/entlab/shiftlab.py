"""Bilateral-shift counterexample lab.

Works on finitely supported vectors over the integer lattice.  The star of
the module is a bounded operator A built from a 0/1 block sequence f: it
fixes e_b for b >= 0 and sends e_b to e_{f(-b) - b} for b < 0.  Conjugating
by powers of the bilateral shift U (U e_b = e_{b-1}) gives

    < U^n A U^n e_0, e_0 > = 1 - f(n),

so the Cesaro means of the matrix coefficient track the density of zeros of
f.  With f constant 1 on binary blocks [2^e, 2^{e+1}) of odd e the prefix
densities oscillate between 1/3 and 2/3 forever and the means diverge.  All
divergence arithmetic here is exact (integers and Fractions).
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import DimensionMismatchError, EmptySequenceError, ValidationError


class SparseZVector:
    """Finitely supported vector over the integer lattice.

    Coefficients keep whatever exact type they were given (int, Fraction,
    complex); arithmetic never coerces, so integer experiments stay exact.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs=None):
        self._c = {}
        if coeffs:
            for b, v in dict(coeffs).items():
                if not isinstance(b, (int, np.integer)) or isinstance(b, bool):
                    raise ValidationError(f"lattice index must be an integer, got {b!r}")
                if v != 0:
                    self._c[int(b)] = v

    @classmethod
    def basis(cls, b: int) -> "SparseZVector":
        return cls({b: 1})

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self._c))

    def __getitem__(self, b: int):
        return self._c.get(b, 0)

    def items(self):
        return sorted(self._c.items())

    def add(self, other: "SparseZVector") -> "SparseZVector":
        out = dict(self._c)
        for b, v in other._c.items():
            out[b] = out.get(b, 0) + v
        return SparseZVector(out)

    def scale(self, c) -> "SparseZVector":
        return SparseZVector({b: c * v for b, v in self._c.items()})

    def inner(self, other: "SparseZVector"):
        """<self, other> = sum_b self[b] * conj(other[b]); exact when both are."""
        keys = self._c.keys() & other._c.keys()
        return sum((self._c[b] * _conj(other._c[b]) for b in keys), 0)

    def norm(self) -> float:
        return float(np.sqrt(float(sum(abs(v) ** 2 for v in self._c.values()))))

    def __eq__(self, other):
        return isinstance(other, SparseZVector) and self._c == other._c

    def __repr__(self):
        inside = ", ".join(f"{b}: {v!r}" for b, v in self.items())
        return f"SparseZVector({{{inside}}})"


def _conj(v):
    return v.conjugate() if hasattr(v, "conjugate") else v


class BlockSequence:
    """f(n) = 1 exactly when floor(log2 n) is odd, n >= 1.

    Constant on binary blocks [2^e, 2^{e+1}): the ones live on blocks with
    odd e.  Prefix sums are computed by counting whole blocks, so they are
    exact for any n that fits in an int.
    """

    def __call__(self, n: int) -> int:
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
            raise ValidationError(f"defined on positive integers, got {n!r}")
        return (int(n).bit_length() - 1) & 1

    def ones_count(self, n: int) -> int:
        """#{ j in [1, n] : f(j) = 1 }, exactly."""
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
            raise ValidationError(f"defined on positive integers, got {n!r}")
        n = int(n)
        total = 0
        e = 1
        while (1 << e) <= n:
            lo = 1 << e
            hi = min(n + 1, 1 << (e + 1))
            total += hi - lo
            e += 2
        return total


BLOCK_SEQUENCE = BlockSequence()


def shift_apply(v: SparseZVector, n: int) -> SparseZVector:
    """Apply U^n where U e_b = e_{b-1}; negative n shifts the other way."""
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ValidationError(f"shift power must be an integer, got {n!r}")
    return SparseZVector({b - int(n): c for b, c in v._c.items()})


def counterexample_A(v: SparseZVector, f=BLOCK_SEQUENCE) -> SparseZVector:
    """The block-sequence companion operator.

    e_b -> e_b for b >= 0, e_b -> e_{f(-b) - b} for b < 0.  Images can
    collide (at most three basis vectors share a target, which is why the
    operator norm is sqrt(3)), so coefficients accumulate.
    """
    out: dict[int, object] = {}
    for b, c in v._c.items():
        target = b if b >= 0 else f(-b) - b
        out[target] = out.get(target, 0) + c
    return SparseZVector(out)


def divergence_experiment(checkpoints, f=BLOCK_SEQUENCE):
    """Exact Cesaro means of <U^n A U^n e_0, e_0> at the given checkpoints.

    Evaluates the operator chain directly on basis vectors with integer
    coefficients and returns [(N, Fraction mean)] sorted by N.  The closed
    block-counting form (N - ones(N)) / N is deliberately not used here; it
    is the independent cross-check in the tests.
    """
    ns = sorted({int(c) for c in checkpoints})
    if not ns:
        raise EmptySequenceError("need at least one checkpoint")
    if ns[0] < 1:
        raise ValidationError("checkpoints must be >= 1")
    e0 = SparseZVector.basis(0)
    out = []
    running = 0
    next_idx = 0
    for n in range(1, ns[-1] + 1):
        w = shift_apply(counterexample_A(shift_apply(e0, n), f), n)
        term = w.inner(e0)
        running += term
        if n == ns[next_idx]:
            out.append((n, Fraction(running, n)))
            next_idx += 1
    return out


def finite_section(apply_fn, window: int) -> np.ndarray:
    """Compression of a lattice operator to span{e_{-w}, ..., e_w}.

    apply_fn maps SparseZVector -> SparseZVector linearly; the returned
    (2w+1) x (2w+1) complex matrix has columns indexed b = -w..w and rows
    likewise, entries <A e_b, e_r>.  Image mass outside the window is
    dropped, which is the point of a finite section.
    """
    if not isinstance(window, (int, np.integer)) or isinstance(window, bool) or window < 0:
        raise DimensionMismatchError(f"window must be a nonnegative integer, got {window!r}")
    w = int(window)
    size = 2 * w + 1
    out = np.zeros((size, size), dtype=np.complex128)
    for col, b in enumerate(range(-w, w + 1)):
        image = apply_fn(SparseZVector.basis(b))
        for idx, coef in image.items():
            if -w <= idx <= w:
                out[idx + w, col] = complex(coef)
    return out
