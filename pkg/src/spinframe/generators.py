"""Random, normalized spin fields for property tests and sweeps.

Coefficients are built as ``g = h f`` with ``f = 1/sqrt(1 + <h, h>)`` so the
normalization holds identically.  Components of ``h`` that enter ``<h, h>``
with a minus sign are kept bounded (scaled sines) so the square root stays
real everywhere.
"""
from __future__ import annotations

import numpy as np

from .geometry import DIM, ETA, NDIM
from .spin_field import Product, Rotation, TypeA, TypeB

__all__ = ["random_polynomial", "random_bounded", "random_type_a", "random_type_b", "random_rotation", "random_product"]


def _num(v: float) -> str:
    return f"{v:.6g}"


def random_polynomial(rng: np.random.Generator, scale: float = 0.5) -> str:
    """Affine term plus one quadratic monomial in the coordinates."""
    c = rng.normal(size=4) * scale
    i, j = rng.integers(0, NDIM, size=2)
    q = rng.normal() * scale * 0.5
    parts = [_num(rng.normal() * scale)]
    parts += [f"({_num(c[k])})*x{k}" for k in range(NDIM)]
    parts.append(f"({_num(q)})*x{i}*x{j}")
    return " + ".join(parts)


def random_bounded(rng: np.random.Generator, amplitude: float) -> str:
    """amplitude * sin(affine), so |value| <= amplitude."""
    c = rng.normal(size=4)
    lin = " + ".join(f"({_num(c[k])})*x{k}" for k in range(NDIM))
    return f"({_num(amplitude)})*sin({_num(rng.normal())} + {lin})"


def _normalized(hs, signs):
    norm = " + ".join(f"({s})*({h})^2" for h, s in zip(hs, signs))
    f = f"1/sqrt(1 + {norm})"
    return f, tuple(f"({h})*{f}" for h in hs)


def random_type_a(rng: np.random.Generator, normal_index: int | None = None) -> TypeA:
    n = int(rng.integers(NDIM, DIM)) if normal_index is None else normal_index
    hs = [random_bounded(rng, 0.4) if ETA[mu] < 0 else random_polynomial(rng) for mu in range(NDIM)]
    f, coeffs = _normalized(hs, [int(ETA[mu]) for mu in range(NDIM)])
    return TypeA(n, f, coeffs)


def random_type_b(rng: np.random.Generator, tangent_index: int | None = None) -> TypeB:
    t = int(rng.integers(0, NDIM)) if tangent_index is None else tangent_index
    tau = int(ETA[t])
    if tau < 0:
        # six bounded terms of amplitude 0.3 keep <h, h> <= 0.54
        hs = [random_bounded(rng, 0.3) for _ in range(DIM - NDIM)]
    else:
        hs = [random_polynomial(rng) for _ in range(DIM - NDIM)]
    f, coeffs = _normalized(hs, [tau] * (DIM - NDIM))
    return TypeB(t, f, coeffs)


def random_rotation(rng: np.random.Generator) -> Rotation:
    I, J = sorted(rng.choice(DIM, size=2, replace=False).tolist())
    return Rotation((I, J), random_polynomial(rng))


def random_product(rng: np.random.Generator, n_factors: int = 2) -> Product:
    makers = (random_type_a, random_type_b, random_rotation)
    factors = [makers[int(rng.integers(0, 3))](rng) for _ in range(n_factors)]
    return Product(tuple(factors))
