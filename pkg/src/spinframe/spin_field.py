"""Declarative spin fields psi(x) and Killing-connection extraction.

A spin field is an even multivector of Cl(1,9) depending on the four
submanifold coordinates.  Every family here can be evaluated as a jet (value,
first and optionally second coordinate derivatives) so the Killing bivectors
``K_a = (d_a psi) reverse(psi)`` come out with exact derivatives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple, Union

import numpy as np

from . import expr as _expr
from .clifford import (
    R19,
    Multivector,
    geometric_product,
    grade_project,
    mask_from_indices,
    reverse,
    sandwich,
    basis_vector,
    simple_bivector_square,
)

__all__ = [
    "Rotation",
    "TypeA",
    "TypeB",
    "Product",
    "PaperExample",
    "Constant",
    "SpinFieldSpec",
    "FDConfig",
    "SpinJet",
    "SpinCheck",
    "KillingData",
    "field_jet",
    "evaluate",
    "partial",
    "check_spin",
    "killing_extract",
    "spec_from_dict",
    "spec_to_dict",
    "PAPER_EXAMPLE_F",
    "PAPER_EXAMPLE_COEFFS",
]

TANGENT = range(0, 4)
NORMAL = range(4, 10)

PAPER_EXAMPLE_F = "1/sqrt(1 + x1^2 + x2^2 + x3^2)"
PAPER_EXAMPLE_COEFFS = (
    "0",
    "-x1/sqrt(1 + x1^2 + x2^2 + x3^2)",
    "-x2/sqrt(1 + x1^2 + x2^2 + x3^2)",
    "-x3/sqrt(1 + x1^2 + x2^2 + x3^2)",
)


def _expr_field(src):
    return _expr.parse(src) if isinstance(src, str) else src


@dataclass(frozen=True)
class Rotation:
    """psi = exp((angle/2) ê_I ê_J) for the plane ``(I, J)``, I < J."""

    plane: Tuple[int, int]
    angle: _expr.Expr

    def __post_init__(self):
        i, j = (int(v) for v in self.plane)
        if not 0 <= i < j <= 9:
            raise ValueError(f"rotation plane must satisfy 0 <= I < J <= 9, got {self.plane}")
        object.__setattr__(self, "plane", (i, j))
        object.__setattr__(self, "angle", _expr_field(self.angle))


@dataclass(frozen=True)
class TypeA:
    """psi = f + sum_mu f^{mu n} ê_mu ê_n with one normal direction ``n``."""

    normal_index: int
    f: _expr.Expr
    coeffs: Tuple[_expr.Expr, ...]

    def __post_init__(self):
        if self.normal_index not in NORMAL:
            raise ValueError(f"normal_index must be in 4..9, got {self.normal_index}")
        if len(self.coeffs) != 4:
            raise ValueError("type-A fields need exactly 4 tangent coefficients")
        object.__setattr__(self, "f", _expr_field(self.f))
        object.__setattr__(self, "coeffs", tuple(_expr_field(c) for c in self.coeffs))

    def blades(self):
        n = self.normal_index
        return [(mu, n) for mu in TANGENT]


@dataclass(frozen=True)
class TypeB:
    """psi = f + sum_k f^{t k} ê_t ê_k with one tangent direction ``t``."""

    tangent_index: int
    f: _expr.Expr
    coeffs: Tuple[_expr.Expr, ...]

    def __post_init__(self):
        if self.tangent_index not in TANGENT:
            raise ValueError(f"tangent_index must be in 0..3, got {self.tangent_index}")
        if len(self.coeffs) != 6:
            raise ValueError("type-B fields need exactly 6 normal coefficients")
        object.__setattr__(self, "f", _expr_field(self.f))
        object.__setattr__(self, "coeffs", tuple(_expr_field(c) for c in self.coeffs))

    def blades(self):
        t = self.tangent_index
        return [(t, k) for k in NORMAL]


@dataclass(frozen=True)
class Product:
    """Ordered geometric product of factor fields."""

    factors: Tuple["SpinFieldSpec", ...]

    def __post_init__(self):
        if len(self.factors) == 0:
            raise ValueError("a product needs at least one factor")
        object.__setattr__(self, "factors", tuple(self.factors))


@dataclass(frozen=True)
class PaperExample:
    """Preset type-A field 1/sqrt(1+r^2) - sum_k x_k/sqrt(1+r^2) ê_k ê_5."""

    def as_type_a(self) -> TypeA:
        return _paper_example_type_a()


@dataclass(frozen=True)
class Constant:
    """A fixed multivector, used to probe the spin-field checks."""

    value: Multivector


@lru_cache(maxsize=1)
def _paper_example_type_a() -> TypeA:
    return TypeA(5, PAPER_EXAMPLE_F, PAPER_EXAMPLE_COEFFS)


SpinFieldSpec = Union[Rotation, TypeA, TypeB, Product, PaperExample, Constant]


@dataclass(frozen=True)
class FDConfig:
    step: float = 1e-5
    scheme: str = "central"

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("finite-difference step must be positive")
        if self.scheme != "central":
            raise ValueError("only the central scheme is supported")


# --- jets ------------------------------------------------------------------

@dataclass
class SpinJet:
    """psi with its first (``d[a]``) and second (``dd[a][b]``) derivatives."""

    value: Multivector
    d: Optional[List[Multivector]] = None
    dd: Optional[List[List[Multivector]]] = None

    @property
    def order(self) -> int:
        return 0 if self.d is None else 1 if self.dd is None else 2

    def __mul__(self, other: "SpinJet") -> "SpinJet":
        A, B = self, other
        order = min(A.order, B.order)
        value = A.value * B.value
        d = dd = None
        if order >= 1:
            d = [A.d[a] * B.value + A.value * B.d[a] for a in range(4)]
        if order >= 2:
            dd = [
                [
                    A.dd[a][b] * B.value + A.d[a] * B.d[b] + A.d[b] * B.d[a] + A.value * B.dd[a][b]
                    for b in range(4)
                ]
                for a in range(4)
            ]
        return SpinJet(value, d, dd)


def _scalar_jet(e, x, order):
    if order == 0:
        return _expr.evaluate(e, x)
    if order == 1:
        return _expr.eval_dual(e, x)
    return _expr.eval_jet(e, x)


def _assemble(parts, order: int) -> SpinJet:
    """Build a SpinJet from ``[(mask, sign, scalar_jet), ...]``."""
    if order == 0:
        return SpinJet(Multivector({m: s * v for m, s, v in parts}, R19))
    value = Multivector({m: s * v.value for m, s, v in parts}, R19)
    d = [Multivector({m: s * v.grad[a] for m, s, v in parts}, R19) for a in range(4)]
    dd = None
    if order == 2:
        dd = [[Multivector({m: s * v.hess[a, b] for m, s, v in parts}, R19) for b in range(4)] for a in range(4)]
    return SpinJet(value, d, dd)


def _coefficient_jet(f, coeffs, pairs, x, order) -> SpinJet:
    parts = [(0, 1.0, _scalar_jet(f, x, order))]
    for (i, j), c in zip(pairs, coeffs):
        parts.append((mask_from_indices((i, j)), 1.0, _scalar_jet(c, x, order)))
    return _assemble(parts, order)


def _rotation_jet(spec: Rotation, x, order) -> SpinJet:
    i, j = spec.plane
    half = _scalar_jet(spec.angle, x, order) * 0.5
    hyperbolic = simple_bivector_square(i, j) > 0
    if order == 0:
        c, s = (math.cosh(half), math.sinh(half)) if hyperbolic else (math.cos(half), math.sin(half))
    else:
        c, s = (half.cosh(), half.sinh()) if hyperbolic else (half.cos(), half.sin())
    return _assemble([(0, 1.0, c), (mask_from_indices((i, j)), 1.0, s)], order)


def _zero_jet(value: Multivector, order: int) -> SpinJet:
    z = Multivector.zero(value.sig)
    d = [z] * 4 if order >= 1 else None
    dd = [[z] * 4 for _ in range(4)] if order >= 2 else None
    return SpinJet(value, d, dd)


def field_jet(spec: SpinFieldSpec, x, order: int = 1) -> SpinJet:
    """Evaluate ``spec`` at ``x`` with derivatives up to ``order`` (0, 1 or 2)."""
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    if isinstance(spec, PaperExample):
        spec = spec.as_type_a()
    if isinstance(spec, (TypeA, TypeB)):
        return _coefficient_jet(spec.f, spec.coeffs, spec.blades(), x, order)
    if isinstance(spec, Rotation):
        return _rotation_jet(spec, x, order)
    if isinstance(spec, Product):
        out = field_jet(spec.factors[0], x, order)
        for factor in spec.factors[1:]:
            out = out * field_jet(factor, x, order)
        return out
    if isinstance(spec, Constant):
        return _zero_jet(spec.value, order)
    raise TypeError(f"unknown spin field family: {spec!r}")


def evaluate(spec: SpinFieldSpec, x) -> Multivector:
    return field_jet(spec, x, 0).value


def partial(spec: SpinFieldSpec, x, alpha: int, fd: Optional[FDConfig] = None, method: str = "ad") -> Multivector:
    """Coordinate derivative d_alpha psi, by forward-mode AD or central differences."""
    if method == "ad":
        return field_jet(spec, x, 1).d[alpha]
    if method != "fd":
        raise ValueError(f"unknown derivative method {method!r}")
    h = (fd or FDConfig()).step
    xp = np.array(x, dtype=float)
    xm = xp.copy()
    xp[alpha] += h
    xm[alpha] -= h
    return (evaluate(spec, xp) - evaluate(spec, xm)) * (1.0 / (2 * h))


# --- checks ----------------------------------------------------------------

@dataclass
class SpinCheck:
    normalization_residual: float
    right_normalization_residual: float
    sandwich_grade_ok: List[bool]
    sandwich_residuals: List[float]
    frame: List[Multivector]
    tol: float

    @property
    def normalized(self) -> bool:
        return self.normalization_residual < self.tol

    @property
    def ok(self) -> bool:
        return self.normalized and all(self.sandwich_grade_ok)

    def failing_indices(self) -> List[int]:
        return [i for i, good in enumerate(self.sandwich_grade_ok) if not good]


def _spin_check(psi: Multivector, tol: float) -> SpinCheck:
    one = Multivector.scalar(1.0, psi.sig)
    rpsi = reverse(psi)
    left = (geometric_product(rpsi, psi) - one).max_abs()
    right = (geometric_product(psi, rpsi) - one).max_abs()
    frame, ok, res = [], [], []
    for i in range(psi.sig.dim):
        e = sandwich(psi, basis_vector(i, psi.sig))
        r = (e - grade_project(e, 1)).max_abs()
        frame.append(e)
        res.append(r)
        ok.append(r < tol)
    return SpinCheck(left, right, ok, res, frame, tol)


def check_spin(spec: Union[SpinFieldSpec, Multivector], x=(0.0, 0.0, 0.0, 0.0), tol: float = 1e-10) -> SpinCheck:
    """Pointwise test of reverse(psi) psi = 1 and grade-1 frame vectors."""
    psi = spec if isinstance(spec, Multivector) else evaluate(spec, x)
    return _spin_check(psi, tol)


@dataclass
class KillingData:
    x: Tuple[float, ...]
    K: List[Multivector]
    grade2_residual: List[float]
    reconstruction_residual: List[float]
    normalization_residual: float
    right_normalization_residual: float


def killing_extract(spec: SpinFieldSpec, x, fd: Optional[FDConfig] = None, method: str = "ad") -> KillingData:
    """K_a = (d_a psi) reverse(psi) with purity and reconstruction residuals.

    K is not grade-projected; the residuals report how far it is from a pure
    bivector and how well ``K_a psi`` reproduces ``d_a psi``.
    """
    x = tuple(float(v) for v in x)
    if method == "ad":
        jet = field_jet(spec, x, 1)
        psi, dpsi = jet.value, jet.d
    else:
        psi = evaluate(spec, x)
        dpsi = [partial(spec, x, a, fd, "fd") for a in range(4)]
    rpsi = reverse(psi)
    one = Multivector.scalar(1.0, psi.sig)
    K, g2, rec = [], [], []
    for a in range(4):
        k = geometric_product(dpsi[a], rpsi)
        K.append(k)
        g2.append((k - grade_project(k, 2)).max_abs())
        rec.append((dpsi[a] - geometric_product(k, psi)).max_abs())
    left = (geometric_product(rpsi, psi) - one).max_abs()
    right = (geometric_product(psi, rpsi) - one).max_abs()
    return KillingData(x, K, g2, rec, left, right)


# --- JSON ------------------------------------------------------------------

def spec_to_dict(spec: SpinFieldSpec) -> dict:
    src = _expr.to_source
    if isinstance(spec, PaperExample):
        return {"family": "paper_example"}
    if isinstance(spec, TypeA):
        return {"family": "typeA", "normal_index": spec.normal_index, "f": src(spec.f),
                "coeffs": [src(c) for c in spec.coeffs]}
    if isinstance(spec, TypeB):
        return {"family": "typeB", "tangent_index": spec.tangent_index, "f": src(spec.f),
                "coeffs": [src(c) for c in spec.coeffs]}
    if isinstance(spec, Rotation):
        return {"family": "rotation", "plane": list(spec.plane), "angle": src(spec.angle)}
    if isinstance(spec, Product):
        return {"family": "product", "factors": [spec_to_dict(f) for f in spec.factors]}
    if isinstance(spec, Constant):
        return {"family": "constant", "multivector": spec.value.to_list()}
    raise TypeError(f"unknown spin field family: {spec!r}")


def spec_from_dict(d: dict) -> SpinFieldSpec:
    fam = d.get("family")
    if fam == "paper_example":
        return PaperExample()
    if fam == "typeA":
        return TypeA(int(d["normal_index"]), d["f"], tuple(d["coeffs"]))
    if fam == "typeB":
        return TypeB(int(d["tangent_index"]), d["f"], tuple(d["coeffs"]))
    if fam == "rotation":
        return Rotation(tuple(d["plane"]), d["angle"])
    if fam == "product":
        return Product(tuple(spec_from_dict(f) for f in d["factors"]))
    if fam == "constant":
        return Constant(Multivector.from_list(d["multivector"], R19))
    raise ValueError(f"unknown spin field family {fam!r}")
