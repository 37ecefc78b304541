"""Sparse real Clifford algebra Cl(p, q) with bitmask blades.

A blade is an unsigned integer whose set bits name the generators it contains,
generator ``i`` being bit ``i``; blades are kept in ascending generator order.
Coefficients are plain floats.  Arithmetic only ever prunes exact zeros, so the
results are deterministic and tolerance free; use :meth:`Multivector.chop` for
display-level cleanup.
"""
from __future__ import annotations

import math
from numbers import Real
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple

__all__ = [
    "Signature",
    "Multivector",
    "SignatureMismatchError",
    "ExpConvergenceError",
    "R19",
    "blade_product",
    "geometric_product",
    "reverse",
    "grade_project",
    "exp_even",
    "sandwich",
    "basis_vector",
    "blade",
    "mask_from_indices",
    "indices_from_mask",
    "bivector_exp",
    "simple_bivector_square",
]

MAX_DIM = 16


class SignatureMismatchError(ValueError):
    """Raised when multivectors from different algebras are combined."""


class ExpConvergenceError(ArithmeticError):
    def __init__(self, last_term_norm: float, terms: int):
        super().__init__(
            f"exponential series did not converge after {terms} terms "
            f"(last term max-coefficient {last_term_norm:.3e})"
        )
        self.last_term_norm = last_term_norm
        self.terms = terms


@dataclass(frozen=True)
class Signature:
    """Diagonal metric of the generators, one entry of +1 or -1 each."""

    dim: int
    metric_diag: Tuple[int, ...]

    def __post_init__(self):
        if not 1 <= self.dim <= MAX_DIM:
            raise ValueError(f"dimension must be in 1..{MAX_DIM}, got {self.dim}")
        diag = tuple(int(m) for m in self.metric_diag)
        if len(diag) != self.dim:
            raise ValueError("metric_diag must have exactly dim entries")
        if any(m not in (-1, 1) for m in diag):
            raise ValueError("metric entries must be +1 or -1")
        object.__setattr__(self, "metric_diag", diag)
        neg = 0
        for i, m in enumerate(diag):
            if m < 0:
                neg |= 1 << i
        object.__setattr__(self, "_negmask", neg)

    @classmethod
    def from_diag(cls, diag: Sequence[int]) -> "Signature":
        return cls(len(diag), tuple(diag))

    @classmethod
    def pq(cls, p: int, q: int, negative_first: bool = True) -> "Signature":
        """Cl(p, q): ``p`` generators squaring to +1 and ``q`` to -1.

        The negative generators come first by default, so ``pq(9, 1)`` is the
        Minkowski signature (-, +, ..., +).
        """
        if negative_first:
            diag = (-1,) * q + (1,) * p
        else:
            diag = (1,) * p + (-1,) * q
        return cls(p + q, diag)

    @property
    def full_mask(self) -> int:
        return (1 << self.dim) - 1

    def eta(self, i: int) -> int:
        return self.metric_diag[i]


# ambient space of the immersion: e0^2 = -1, e1..e9 square to +1
R19 = Signature.pq(9, 1)


def _reorder_sign(a: int, b: int) -> int:
    # parity of the transpositions needed to merge b's generators past a's
    a >>= 1
    swaps = 0
    while a:
        swaps += (a & b).bit_count()
        a >>= 1
    return -1 if swaps & 1 else 1


def blade_product(a: int, b: int, sig: Signature) -> Tuple[int, int]:
    """Product of two basis blades: returns ``(sign, a ^ b)``."""
    sign = _reorder_sign(a, b)
    if (a & b & sig._negmask).bit_count() & 1:
        sign = -sign
    return sign, a ^ b


def mask_from_indices(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        if mask >> i & 1:
            raise ValueError(f"repeated generator index {i}")
        mask |= 1 << i
    return mask


def indices_from_mask(mask: int) -> List[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


class Multivector:
    """Immutable sparse element of Cl(p, q).

    ``terms`` maps blade masks to non-zero float coefficients.
    """

    __slots__ = ("_terms", "sig")
    # numpy scalars defer to our operators instead of broadcasting
    __array_ufunc__ = None

    def __init__(self, terms: Mapping[int, float], sig: Signature = R19):
        limit = 1 << sig.dim
        clean = {}
        for mask, c in terms.items():
            mask = int(mask)
            if not 0 <= mask < limit:
                raise ValueError(f"blade mask {mask} out of range for dim {sig.dim}")
            c = float(c)
            if c != 0.0:
                clean[mask] = c
        self._terms = clean
        self.sig = sig

    @classmethod
    def _raw(cls, terms: Dict[int, float], sig: Signature) -> "Multivector":
        # trusted constructor: terms already validated and zero-free
        mv = cls.__new__(cls)
        mv._terms = terms
        mv.sig = sig
        return mv

    @classmethod
    def scalar(cls, value: float, sig: Signature = R19) -> "Multivector":
        return cls({0: value}, sig)

    @classmethod
    def zero(cls, sig: Signature = R19) -> "Multivector":
        return cls._raw({}, sig)

    @property
    def terms(self) -> Dict[int, float]:
        return dict(self._terms)

    def __iter__(self) -> Iterator[Tuple[int, float]]:
        return iter(sorted(self._terms.items()))

    def __len__(self) -> int:
        return len(self._terms)

    def __getitem__(self, mask: int) -> float:
        return self._terms.get(mask, 0.0)

    def coeff(self, *indices: int) -> float:
        """Coefficient of the blade ê_{i1} ê_{i2} ... (indices ascending)."""
        return self._terms.get(mask_from_indices(indices), 0.0)

    def grades(self) -> set:
        return {m.bit_count() for m in self._terms}

    def is_even(self) -> bool:
        return all(m.bit_count() % 2 == 0 for m in self._terms)

    def max_abs(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def scalar_part(self) -> float:
        return self._terms.get(0, 0.0)

    def vector_part(self) -> List[float]:
        """Grade-1 coefficients as a dense list of length ``dim``."""
        return [self._terms.get(1 << i, 0.0) for i in range(self.sig.dim)]

    def _check(self, other: "Multivector"):
        if self.sig != other.sig:
            raise SignatureMismatchError(f"cannot combine {self.sig} with {other.sig}")

    def _coerce(self, other) -> "Multivector":
        if isinstance(other, Multivector):
            self._check(other)
            return other
        if isinstance(other, Real):
            return Multivector.scalar(other, self.sig)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            v = out.get(m, 0.0) + c
            if v == 0.0:
                out.pop(m, None)
            else:
                out[m] = v
        return Multivector._raw(out, self.sig)

    __radd__ = __add__

    def __neg__(self):
        return Multivector._raw({m: -c for m, c in self._terms.items()}, self.sig)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return geometric_product(self, other)
        if isinstance(other, Real):
            if other == 0:
                return Multivector.zero(self.sig)
            return Multivector({m: c * other for m, c in self._terms.items()}, self.sig)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Real):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Real):
            return self * (1.0 / other)
        return NotImplemented

    def __invert__(self):
        return reverse(self)

    def __eq__(self, other):
        if isinstance(other, Real):
            other = Multivector.scalar(other, self.sig)
        if not isinstance(other, Multivector):
            return NotImplemented
        return self.sig == other.sig and self._terms == other._terms

    def __hash__(self):
        return hash((self.sig, frozenset(self._terms.items())))

    def grade(self, k: int) -> "Multivector":
        return grade_project(self, k)

    def chop(self, tol: float = 1e-12) -> "Multivector":
        """Drop coefficients with magnitude below ``tol`` (display helper)."""
        return Multivector._raw({m: c for m, c in self._terms.items() if abs(c) >= tol}, self.sig)

    def max_diff(self, other: "Multivector") -> float:
        return (self - other).max_abs()

    def to_list(self) -> List[dict]:
        """Text form: ``[{"blade": [...], "coeff": c}, ...]`` in mask order."""
        return [{"blade": indices_from_mask(m), "coeff": c} for m, c in self]

    @classmethod
    def from_list(cls, items: Iterable[Mapping], sig: Signature = R19) -> "Multivector":
        out: Dict[int, float] = {}
        for item in items:
            mask = mask_from_indices(item["blade"])
            # accept non-ascending input, folding the reordering sign into the coefficient
            sign = _canonical_sign(list(item["blade"]), sig)
            out[mask] = out.get(mask, 0.0) + sign * float(item["coeff"])
        return cls(out, sig)

    def __repr__(self):
        if not self._terms:
            return "0"
        parts = []
        for m, c in self:
            name = "".join(f"e{i}" for i in indices_from_mask(m))
            parts.append(f"{c!r}" + (f"*{name}" if name else ""))
        return " + ".join(parts)


def _canonical_sign(indices: List[int], sig: Signature) -> int:
    sign = 1
    mask = 0
    for i in indices:
        s, mask = blade_product(mask, 1 << i, sig)
        sign *= s
    return sign


def basis_vector(i: int, sig: Signature = R19) -> Multivector:
    return Multivector._raw({1 << i: 1.0}, sig)


def blade(*indices: int, sig: Signature = R19) -> Multivector:
    """Product ê_{i1} ê_{i2} ... of distinct generators in the given order."""
    mask = mask_from_indices(indices)
    return Multivector._raw({mask: float(_canonical_sign(list(indices), sig))}, sig)


def geometric_product(A: Multivector, B: Multivector) -> Multivector:
    if A.sig != B.sig:
        raise SignatureMismatchError(f"cannot multiply {A.sig} with {B.sig}")
    sig = A.sig
    neg = sig._negmask
    out: Dict[int, float] = {}
    get = out.get
    for ma, ca in A._terms.items():
        for mb, cb in B._terms.items():
            # inline blade_product: this loop dominates runtime
            a = ma >> 1
            swaps = (ma & mb & neg).bit_count()
            while a:
                swaps += (a & mb).bit_count()
                a >>= 1
            v = ca * cb
            m = ma ^ mb
            out[m] = get(m, 0.0) + (-v if swaps & 1 else v)
    return Multivector._raw({m: c for m, c in out.items() if c != 0.0}, sig)


def reverse(A: Multivector) -> Multivector:
    out = {}
    for m, c in A._terms.items():
        k = m.bit_count()
        out[m] = -c if (k * (k - 1) // 2) & 1 else c
    return Multivector._raw(out, A.sig)


def grade_project(A: Multivector, k: int) -> Multivector:
    if not 0 <= k <= A.sig.dim:
        raise ValueError(f"grade {k} out of range 0..{A.sig.dim}")
    return Multivector._raw({m: c for m, c in A._terms.items() if m.bit_count() == k}, A.sig)


def exp_even(B: Multivector, max_terms: int = 200) -> Multivector:
    """Power series exponential of an even multivector.

    Summation stops once the next term's largest coefficient drops below
    ``1e-16 * (1 + largest coefficient of the partial sum)``.
    """
    if not B.is_even():
        raise ValueError("exp_even requires an even-grade argument")
    total = Multivector.scalar(1.0, B.sig)
    term = total
    for n in range(1, max_terms + 1):
        term = geometric_product(term, B) * (1.0 / n)
        tnorm = term.max_abs()
        total = total + term
        if tnorm < 1e-16 * (1.0 + total.max_abs()):
            return total
    raise ExpConvergenceError(tnorm, max_terms)


def sandwich(psi: Multivector, v: Multivector) -> Multivector:
    """Rotated element ``reverse(psi) * v * psi``."""
    if not psi.is_even():
        raise ValueError("sandwich requires an even-grade rotor")
    return geometric_product(geometric_product(reverse(psi), v), psi)


def simple_bivector_square(i: int, j: int, sig: Signature = R19) -> int:
    """Scalar value of (ê_i ê_j)^2 for i != j."""
    return -sig.eta(i) * sig.eta(j)


def bivector_exp(i: int, j: int, half_angle: float, sig: Signature = R19) -> Multivector:
    """Closed form of exp(half_angle * ê_i ê_j), circular or hyperbolic."""
    B = blade(i, j, sig=sig)
    if simple_bivector_square(i, j, sig) < 0:
        return math.cos(half_angle) + math.sin(half_angle) * B
    return math.cosh(half_angle) + math.sinh(half_angle) * B
