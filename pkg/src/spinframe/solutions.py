"""Closed-form connections for the type-A/B families and product composition.

Type A fields are ``psi = f + sum_mu g^mu e_mu e_n`` with one normal index n;
type B fields are ``psi = f + sum_k g^k e_t e_k`` with one tangent index t.
For both, the extrinsic curvature is ``2 f^2 d(g/f)`` and the remaining block
(omega for A, the normal connection for B) is fixed by it.

Composition: for psi = psi1 psi2 with psi1 of type A or B, the connection of the
product is W1 plus psi1 K2 reverse(psi1) read back into blocks.  The
``compose_connection_*`` functions evaluate that conjugation in closed form,
block by block; ``printed_compose_*`` keep a literal transcription of the
originally published expansions, whose disagreements with the conjugation are
reported by :func:`formula_discrepancies`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import expr as _expr
from .clifford import R19, Multivector, geometric_product, reverse
from .dual import Dual4, Jet2
from .geometry import DIM, ETA, ETA_T, NDIM, ConnectionAtPoint, reconstruct_bivectors, split_connection
from .spin_field import Constant, PaperExample, Rotation, TypeA, TypeB

__all__ = [
    "SingularGaugeError",
    "NormalizationError",
    "GradePurityError",
    "CompositionMismatchWarning",
    "TypeAPoint",
    "TypeBPoint",
    "ComposedConnection",
    "typeA_closed_connection",
    "typeB_closed_connection",
    "rotation_closed_connection",
    "closed_connection",
    "closed_connection_derivatives",
    "conjugate_bivector",
    "composition_oracle",
    "compose_connection_A",
    "compose_connection_B",
    "printed_compose_A",
    "printed_compose_B",
    "formula_discrepancies",
    "SINGULAR_F",
    "NORMALIZATION_TOL",
]

SINGULAR_F = 1e-10
NORMALIZATION_TOL = 1e-8


class SingularGaugeError(ArithmeticError):
    """|f| fell below the threshold where the 1/f closed forms break down."""


class NormalizationError(ValueError):
    """Coefficients violate f^2 + <g, g> = 1."""


class GradePurityError(AssertionError):
    pass


class CompositionMismatchWarning(RuntimeWarning):
    pass


def _val(s):
    return s.value if isinstance(s, (Dual4, Jet2)) else float(s)


# --- pointwise parameters --------------------------------------------------

@dataclass
class TypeAPoint:
    """Type-A coefficients and their gradients at one point.

    ``grad_g[mu, a] = d_a g^mu``.
    """

    normal_index: int
    f: float
    g: np.ndarray
    grad_f: np.ndarray = field(default_factory=lambda: np.zeros(NDIM))
    grad_g: np.ndarray = field(default_factory=lambda: np.zeros((NDIM, NDIM)))

    def __post_init__(self):
        if not NDIM <= self.normal_index < DIM:
            raise ValueError(f"normal_index must be in 4..9, got {self.normal_index}")
        self.f = float(self.f)
        self.g = np.asarray(self.g, dtype=float).reshape(NDIM)
        self.grad_f = np.asarray(self.grad_f, dtype=float).reshape(NDIM)
        self.grad_g = np.asarray(self.grad_g, dtype=float).reshape(NDIM, NDIM)

    @classmethod
    def from_spec(cls, spec, x) -> "TypeAPoint":
        if isinstance(spec, PaperExample):
            spec = spec.as_type_a()
        f = _expr.eval_dual(spec.f, x)
        gs = [_expr.eval_dual(c, x) for c in spec.coeffs]
        return cls(spec.normal_index, f.value, [c.value for c in gs], f.grad, [c.grad for c in gs])

    def normalization(self) -> float:
        return self.f ** 2 + float(np.sum(ETA_T * self.g ** 2))

    def psi(self) -> Multivector:
        n = self.normal_index
        terms = {0: self.f}
        for mu in range(NDIM):
            terms[(1 << mu) | (1 << n)] = self.g[mu]
        return Multivector(terms, R19)

    def dpsi(self):
        n = self.normal_index
        out = []
        for a in range(NDIM):
            terms = {0: self.grad_f[a]}
            for mu in range(NDIM):
                terms[(1 << mu) | (1 << n)] = self.grad_g[mu, a]
            out.append(Multivector(terms, R19))
        return out

    def to_dict(self) -> dict:
        return {"family": "typeA", "normal_index": self.normal_index, "f": self.f,
                "g": self.g.tolist(), "grad_f": self.grad_f.tolist(), "grad_g": self.grad_g.tolist()}


@dataclass
class TypeBPoint:
    """Type-B coefficients at one point; ``g[k - 4]`` multiplies e_t e_k."""

    tangent_index: int
    f: float
    g: np.ndarray
    grad_f: np.ndarray = field(default_factory=lambda: np.zeros(NDIM))
    grad_g: np.ndarray = field(default_factory=lambda: np.zeros((DIM - NDIM, NDIM)))

    def __post_init__(self):
        if not 0 <= self.tangent_index < NDIM:
            raise ValueError(f"tangent_index must be in 0..3, got {self.tangent_index}")
        self.f = float(self.f)
        self.g = np.asarray(self.g, dtype=float).reshape(DIM - NDIM)
        self.grad_f = np.asarray(self.grad_f, dtype=float).reshape(NDIM)
        self.grad_g = np.asarray(self.grad_g, dtype=float).reshape(DIM - NDIM, NDIM)

    @classmethod
    def from_spec(cls, spec: TypeB, x) -> "TypeBPoint":
        f = _expr.eval_dual(spec.f, x)
        gs = [_expr.eval_dual(c, x) for c in spec.coeffs]
        return cls(spec.tangent_index, f.value, [c.value for c in gs], f.grad, [c.grad for c in gs])

    @property
    def tau(self) -> float:
        return float(ETA[self.tangent_index])

    def normalization(self) -> float:
        return self.f ** 2 + self.tau * float(np.sum(self.g ** 2))

    def psi(self) -> Multivector:
        t = self.tangent_index
        terms = {0: self.f}
        for k in range(DIM - NDIM):
            terms[(1 << t) | (1 << (k + NDIM))] = self.g[k]
        return Multivector(terms, R19)

    def dpsi(self):
        t = self.tangent_index
        out = []
        for a in range(NDIM):
            terms = {0: self.grad_f[a]}
            for k in range(DIM - NDIM):
                terms[(1 << t) | (1 << (k + NDIM))] = self.grad_g[k, a]
            out.append(Multivector(terms, R19))
        return out

    def to_dict(self) -> dict:
        return {"family": "typeB", "tangent_index": self.tangent_index, "f": self.f,
                "g": self.g.tolist(), "grad_f": self.grad_f.tolist(), "grad_g": self.grad_g.tolist()}


def _check_gauge(f, norm):
    if abs(_val(f)) < SINGULAR_F:
        raise SingularGaugeError(f"|f| = {abs(_val(f)):.3e} is below {SINGULAR_F}; the closed forms divide by f")
    if abs(norm - 1.0) > NORMALIZATION_TOL:
        raise NormalizationError(f"normalization f^2 + <g, g> = {norm!r}, expected 1")


# --- closed-form blocks, generic over the scalar type ------------------------
#
# dq[a][m] is d_a (g^m / f).  With floats the result is the connection; with
# Dual4 entries every W[a][I][J] also carries its coordinate gradient.

def _typeA_blocks(n, f, g, dq):
    zero = 0.0 * f
    W = [[[zero] * DIM for _ in range(DIM)] for _ in range(NDIM)]
    for a in range(NDIM):
        H = [2.0 * f * f * dq[a][mu] for mu in range(NDIM)]
        for mu in range(NDIM):
            W[a][mu][n] = H[mu]
            W[a][n][mu] = -H[mu]
            for nu in range(mu + 1, NDIM):
                w = (H[mu] * g[nu] - H[nu] * g[mu]) / f
                W[a][mu][nu] = w
                W[a][nu][mu] = -w
    return W


def _typeB_blocks(t, f, g, dq):
    tau = float(ETA[t])
    zero = 0.0 * f
    W = [[[zero] * DIM for _ in range(DIM)] for _ in range(NDIM)]
    m = DIM - NDIM
    for a in range(NDIM):
        H = [2.0 * f * f * dq[a][k] for k in range(m)]
        for k in range(m):
            W[a][t][k + NDIM] = H[k]
            W[a][k + NDIM][t] = -H[k]
            for l in range(k + 1, m):
                w = tau * (H[k] * g[l] - H[l] * g[k]) / f
                W[a][k + NDIM][l + NDIM] = w
                W[a][l + NDIM][k + NDIM] = -w
    return W


def _to_array(W):
    return np.array([[[_val(v) for v in row] for row in Wa] for Wa in W])


def _to_gradient(W):
    # dW[b, a, I, J] = d_b W[a][I][J]
    out = np.zeros((NDIM, NDIM, DIM, DIM))
    for a in range(NDIM):
        for I in range(DIM):
            for J in range(DIM):
                v = W[a][I][J]
                if isinstance(v, Dual4):
                    out[:, a, I, J] = v.grad
    return out


def _float_dq(p):
    # d_a (g^m / f) from values and gradients
    return [[(p.grad_g[m, a] * p.f - p.g[m] * p.grad_f[a]) / p.f ** 2 for m in range(len(p.g))]
            for a in range(NDIM)]


def _jet_inputs(f_expr, coeff_exprs, x):
    fj = _expr.eval_jet(f_expr, x)
    gj = [_expr.eval_jet(c, x) for c in coeff_exprs]
    if abs(fj.value) < SINGULAR_F:
        raise SingularGaugeError(f"|f| = {abs(fj.value):.3e} is below {SINGULAR_F}; the closed forms divide by f")
    qs = [c / fj for c in gj]
    dq = [[Dual4(q.grad[a], q.hess[a]) for q in qs] for a in range(NDIM)]
    return fj, gj, dq


def typeA_closed_connection(params: Union[TypeAPoint, TypeA, PaperExample], x=None) -> ConnectionAtPoint:
    """Type-A connection: H = 2 f^2 d(g/f), omega from H, everything else zero."""
    if not isinstance(params, TypeAPoint):
        params = TypeAPoint.from_spec(params, x)
    _check_gauge(params.f, params.normalization())
    W = _typeA_blocks(params.normal_index, params.f, params.g, _float_dq(params))
    return ConnectionAtPoint(_to_array(W), x=None if x is None else tuple(float(v) for v in x))


def typeB_closed_connection(params: Union[TypeBPoint, TypeB], x=None) -> ConnectionAtPoint:
    """Type-B connection: H = 2 f^2 d(g/f), normal connection from H, omega = 0."""
    if not isinstance(params, TypeBPoint):
        params = TypeBPoint.from_spec(params, x)
    _check_gauge(params.f, params.normalization())
    W = _typeB_blocks(params.tangent_index, params.f, params.g, _float_dq(params))
    return ConnectionAtPoint(_to_array(W), x=None if x is None else tuple(float(v) for v in x))


def rotation_closed_connection(spec: Rotation, x) -> ConnectionAtPoint:
    """A rotation exp(theta/2 e_I e_J) has W^{IJ} = d theta and nothing else."""
    th = _expr.eval_dual(spec.angle, x)
    I, J = spec.plane
    W = np.zeros((NDIM, DIM, DIM))
    W[:, I, J] = th.grad
    W[:, J, I] = -th.grad
    return ConnectionAtPoint(W, x=tuple(float(v) for v in x))


def closed_connection(spec, x) -> ConnectionAtPoint:
    return closed_connection_derivatives(spec, x)[0]


def closed_connection_derivatives(spec, x):
    """Closed-form connection and its exact derivatives ``dW[a, b] = d_a W_b``."""
    xt = tuple(float(v) for v in x)
    if isinstance(spec, PaperExample):
        spec = spec.as_type_a()
    if isinstance(spec, (TypeA, TypeB)):
        fj, gj, dq = _jet_inputs(spec.f, spec.coeffs, xt)
        f1 = fj.first_order()
        g1 = [c.first_order() for c in gj]
        if isinstance(spec, TypeA):
            norm = fj.value ** 2 + sum(ETA_T[m] * c.value ** 2 for m, c in enumerate(gj))
            _check_gauge(fj.value, norm)
            W = _typeA_blocks(spec.normal_index, f1, g1, dq)
        else:
            tau = float(ETA[spec.tangent_index])
            norm = fj.value ** 2 + tau * sum(c.value ** 2 for c in gj)
            _check_gauge(fj.value, norm)
            W = _typeB_blocks(spec.tangent_index, f1, g1, dq)
        return ConnectionAtPoint(_to_array(W), x=xt), _to_gradient(W)
    if isinstance(spec, Rotation):
        th = _expr.eval_jet(spec.angle, xt)
        I, J = spec.plane
        W = np.zeros((NDIM, DIM, DIM))
        dW = np.zeros((NDIM, NDIM, DIM, DIM))
        W[:, I, J], W[:, J, I] = th.grad, -th.grad
        dW[:, :, I, J], dW[:, :, J, I] = th.hess, -th.hess
        return ConnectionAtPoint(W, x=xt), dW
    if isinstance(spec, Constant):
        return ConnectionAtPoint.zero(xt), np.zeros((NDIM, NDIM, DIM, DIM))
    raise TypeError(f"no closed-form connection for {type(spec).__name__}")


# --- conjugation oracle ----------------------------------------------------

def conjugate_bivector(psi: Multivector, K: Multivector, tol: float = 1e-12) -> Multivector:
    """psi K reverse(psi) for psi in grades {0, 2}; the result must be a bivector."""
    if not psi.grades() <= {0, 2}:
        raise GradePurityError(f"psi has grades {sorted(psi.grades())}; only 0 and 2 are allowed")
    out = geometric_product(geometric_product(psi, K), reverse(psi))
    off = (out - out.grade(2)).max_abs()
    if off > tol * (1.0 + out.max_abs()):
        raise GradePurityError(f"conjugated bivector has off-grade part {off:.3e}")
    return out


def composition_oracle(params: Union[TypeAPoint, TypeBPoint], conn2: ConnectionAtPoint) -> ConnectionAtPoint:
    """Connection of psi1 psi2 read off K1 + psi1 K2 reverse(psi1) directly."""
    psi = params.psi()
    rpsi = reverse(psi)
    K2 = reconstruct_bivectors(conn2.W)
    K = []
    for a, d in enumerate(params.dpsi()):
        K1 = geometric_product(d, rpsi)
        K.append(K1 + conjugate_bivector(psi, K2[a]))
    return split_connection(K, conn2.x)


# --- composition in closed form --------------------------------------------

@dataclass
class ComposedConnection:
    conn: ConnectionAtPoint
    conn1: ConnectionAtPoint
    conn2: ConnectionAtPoint
    params: Union[TypeAPoint, TypeBPoint]
    oracle_residual: Optional[float] = None

    @property
    def omega_p(self):
        return self.conn.omega

    @property
    def H_p(self):
        return self.conn.H

    @property
    def A_p(self):
        return self.conn.A

    def to_dict(self) -> dict:
        out = self.conn.to_dict()
        out["inputs"] = {
            "psi1": self.params.to_dict(),
            "conn1": self.conn1.to_dict(),
            "conn2": self.conn2.to_dict(),
        }
        if self.oracle_residual is not None:
            out["oracle_residual"] = self.oracle_residual
        return out


def _conjugated_A(p: TypeAPoint, W2: np.ndarray) -> np.ndarray:
    """psi1 K2 reverse(psi1) in blocks, psi1 of type A."""
    n = p.normal_index
    f, g = p.f, p.g
    gl = ETA_T * g
    s = float(g @ gl)
    normals = [i for i in range(NDIM, DIM) if i != n]
    out = np.zeros_like(W2)
    for a in range(NDIM):
        w2 = W2[a, :NDIM, :NDIM]
        Hn = W2[a, :NDIM, n]
        wg = w2 @ gl                       # sum_c omega2^{mu c} g_c
        om = w2 + 2.0 * (np.outer(g, wg) - np.outer(wg, g)) + 2.0 * f * (np.outer(Hn, g) - np.outer(g, Hn))
        out[a, :NDIM, :NDIM] = om
        hn = (f * f - s) * Hn + 2.0 * g * float(gl @ Hn) - 2.0 * f * wg
        out[a, :NDIM, n] = hn
        out[a, n, :NDIM] = -hn
        for i in normals:
            Hi = W2[a, :NDIM, i]
            gH = float(gl @ Hi)
            hi = Hi - 2.0 * g * gH + 2.0 * f * g * W2[a, n, i]
            out[a, :NDIM, i] = hi
            out[a, i, :NDIM] = -hi
            ani = (f * f - s) * W2[a, n, i] - 2.0 * f * gH
            out[a, n, i] = ani
            out[a, i, n] = -ani
            for j in normals:
                out[a, i, j] = W2[a, i, j]
    return out


def _conjugated_B(p: TypeBPoint, W2: np.ndarray) -> np.ndarray:
    """psi1 K2 reverse(psi1) in blocks, psi1 of type B."""
    t = p.tangent_index
    tau = p.tau
    f = p.f
    g = np.zeros(DIM)
    g[NDIM:] = p.g
    s = float(p.g @ p.g)
    others = [mu for mu in range(NDIM) if mu != t]
    N = slice(NDIM, DIM)
    out = np.zeros_like(W2)
    for a in range(NDIM):
        w2 = W2[a]
        for mu in others:
            for nu in others:
                out[a, mu, nu] = w2[mu, nu]
            w = (f * f - tau * s) * w2[t, mu] - 2.0 * f * float(g[N] @ w2[mu, N])
            out[a, t, mu] = w
            out[a, mu, t] = -w
        Ht = w2[t, N]
        A2 = w2[N, N]
        gA = A2 @ g[N]                      # sum_m A2^{k m} g_m
        ht = (f * f - tau * s) * Ht + 2.0 * tau * g[N] * float(g[N] @ Ht) - 2.0 * f * gA
        out[a, t, N] = ht
        out[a, N, t] = -ht
        for mu in others:
            Hm = w2[mu, N]
            hm = Hm - 2.0 * tau * g[N] * float(g[N] @ Hm) - 2.0 * tau * f * g[N] * w2[mu, t]
            out[a, mu, N] = hm
            out[a, N, mu] = -hm
        out[a, N, N] = (A2 + 2.0 * tau * (np.outer(g[N], gA) - np.outer(gA, g[N]))
                        + 2.0 * tau * f * (np.outer(Ht, g[N]) - np.outer(g[N], Ht)))
    return out


def _compose(p, conn2, conjugate, closed, verify):
    conn1 = closed(p)
    W = conn1.W + conjugate(p, conn2.W)
    conn = ConnectionAtPoint(W, x=conn2.x)
    residual = None
    if verify:
        oracle = composition_oracle(p, conn2)
        residual = conn.max_diff(oracle)
        if residual > 1e-10 * (1.0 + np.max(np.abs(oracle.W))):
            warnings.warn(
                f"closed-form composition differs from direct conjugation by {residual:.3e}; using the conjugation",
                CompositionMismatchWarning,
                stacklevel=3,
            )
            conn = oracle
    return ComposedConnection(conn, conn1, conn2, p, residual)


def compose_connection_A(params: TypeAPoint, conn2: ConnectionAtPoint, verify: bool = True) -> ComposedConnection:
    """Connection of psi1 psi2 for psi1 of type A, given psi2's connection."""
    return _compose(params, conn2, _conjugated_A, typeA_closed_connection, verify)


def compose_connection_B(params: TypeBPoint, conn2: ConnectionAtPoint, verify: bool = True) -> ComposedConnection:
    """Connection of psi1 psi2 for psi1 of type B, given psi2's connection."""
    return _compose(params, conn2, _conjugated_B, typeB_closed_connection, verify)


# --- literal transcription of the published expansions ----------------------
#
# Kept only to measure how far the printed coefficients are from the
# conjugation.  Restricted sums run over the tangent (type A) or normal
# (type B) coefficients exactly as written; a lowered tangent index picks up
# eta, the spacelike special normal index does not.

def printed_compose_A(p: TypeAPoint, conn2: ConnectionAtPoint) -> ConnectionAtPoint:
    n = p.normal_index
    f, g = p.f, p.g
    gl = ETA_T * g
    W1 = typeA_closed_connection(p).W
    W2 = conn2.W
    normals = [i for i in range(NDIM, DIM) if i != n]
    out = np.zeros_like(W2)

    def restricted(skip):
        return sum(gl[c] * g[c] for c in range(NDIM) if c not in skip)

    for a in range(NDIM):
        w2 = W2[a]
        for mu in range(NDIM):
            for nu in range(NDIM):
                if mu == nu:
                    continue
                v = W1[a, mu, nu] + w2[mu, nu] * (f * f + restricted((mu, nu)))
                v += 2.0 * sum(w2[nu, c] * ETA_T[c] * g[mu] * g[c] for c in range(NDIM))
                v -= 2.0 * sum(w2[mu, c] * ETA_T[c] * g[nu] * g[c] for c in range(NDIM))
                v += 2.0 * w2[mu, n] * f * g[nu] - 2.0 * w2[nu, n] * f * g[mu]
                out[a, mu, nu] = v
            # extrinsic curvature along n: no W1 term in the printed display
            h = w2[mu, n] * (f * f - 2.0 * restricted((mu,)))
            h -= 2.0 * sum(w2[mu, c] * ETA_T[c] * f * g[c] for c in range(NDIM))
            h += 4.0 * sum(ETA_T[c] * w2[c, n] * g[c] * g[mu] for c in range(NDIM))
            out[a, mu, n], out[a, n, mu] = h, -h
            for i in normals:
                h = w2[mu, i] * (f * f + restricted((mu,)))
                h += 2.0 * w2[n, i] * f * g[mu]
                h += 2.0 * sum(ETA_T[c] * w2[c, i] * g[c] * g[mu] for c in range(NDIM))
                out[a, mu, i], out[a, i, mu] = h, -h
        for i in normals:
            v = w2[n, i] * (f * f - 2.0 * float(gl @ g))
            v -= 2.0 * sum(ETA_T[c] * w2[c, i] * f * g[c] for c in range(NDIM))
            out[a, n, i], out[a, i, n] = v, -v
            for j in normals:
                out[a, i, j] = w2[i, j]
    return ConnectionAtPoint(out, x=conn2.x)


def printed_compose_B(p: TypeBPoint, conn2: ConnectionAtPoint) -> ConnectionAtPoint:
    t = p.tangent_index
    tau = p.tau
    f = p.f
    g = np.zeros(DIM)
    g[NDIM:] = p.g
    W1 = typeB_closed_connection(p).W
    W2 = conn2.W
    N = range(NDIM, DIM)
    others = [mu for mu in range(NDIM) if mu != t]
    out = np.zeros_like(W2)

    def restricted(skip):
        # sum over k not in skip of f_{tk} f^{tk}
        return sum(tau * g[k] * g[k] for k in N if k not in skip)

    full_sq = sum(g[k] * g[k] for k in N)  # f^t_k f^{tk}
    for a in range(NDIM):
        w2 = W2[a]
        for mu in others:
            v = w2[t, mu] * f * f
            v -= 2.0 * w2[mu, t] * tau * full_sq
            v -= 2.0 * sum(w2[mu, k] * f * g[k] for k in N)
            out[a, t, mu], out[a, mu, t] = v, -v
            for nu in others:
                out[a, mu, nu] = w2[mu, nu]
        for i in N:
            h = W1[a, t, i] + w2[t, i] * (f * f - 2.0 * restricted((i,)))
            h -= 2.0 * sum(w2[i, k] * f * g[k] for k in N)
            h += 4.0 * sum(tau * w2[t, k] * g[k] * g[i] for k in N)
            out[a, t, i], out[a, i, t] = h, -h
            for mu in others:
                h = w2[mu, i] * (f * f + restricted((i,)))
                h -= 2.0 * w2[mu, t] * tau * f * g[i]
                h -= 2.0 * sum(w2[mu, k] * tau * g[i] * g[k] for k in N)
                out[a, mu, i], out[a, i, mu] = h, -h
            for j in N:
                if i == j:
                    continue
                v = W1[a, i, j] + w2[i, j] * (f * f + restricted((i, j)))
                v += 2.0 * sum(w2[j, m] * tau * g[i] * g[m] for m in N)
                v -= 2.0 * sum(w2[i, m] * tau * g[j] * g[m] for m in N)
                v += 2.0 * tau * w2[t, i] * f * g[j] - 2.0 * tau * w2[t, j] * f * g[i]
                out[a, i, j] = v
    return ConnectionAtPoint(out, x=conn2.x)


_BLOCKS_A = ("omega", "H^{mu n}", "H^{mu i}", "A^{n i}", "A^{i j}")
_BLOCKS_B = ("omega^{t mu}", "omega^{mu nu}", "H^{t i}", "H^{mu i}", "A^{i j}")


def _block_masks_A(n):
    masks = {b: np.zeros((DIM, DIM), bool) for b in _BLOCKS_A}
    for I in range(DIM):
        for J in range(DIM):
            if I == J:
                continue
            lo, hi = min(I, J), max(I, J)
            if hi < NDIM:
                masks["omega"][I, J] = True
            elif lo < NDIM:
                masks["H^{mu n}" if hi == n else "H^{mu i}"][I, J] = True
            elif n in (I, J):
                masks["A^{n i}"][I, J] = True
            else:
                masks["A^{i j}"][I, J] = True
    return masks


def _block_masks_B(t):
    masks = {b: np.zeros((DIM, DIM), bool) for b in _BLOCKS_B}
    for I in range(DIM):
        for J in range(DIM):
            if I == J:
                continue
            lo, hi = min(I, J), max(I, J)
            if hi < NDIM:
                masks["omega^{t mu}" if t in (I, J) else "omega^{mu nu}"][I, J] = True
            elif lo < NDIM:
                masks["H^{t i}" if lo == t else "H^{mu i}"][I, J] = True
            else:
                masks["A^{i j}"][I, J] = True
    return masks


def formula_discrepancies(params: Union[TypeAPoint, TypeBPoint], conn2: ConnectionAtPoint) -> dict:
    """Max |printed - conjugation| per block of the primed connection."""
    oracle = composition_oracle(params, conn2)
    if isinstance(params, TypeAPoint):
        printed = printed_compose_A(params, conn2)
        masks = _block_masks_A(params.normal_index)
    else:
        printed = printed_compose_B(params, conn2)
        masks = _block_masks_B(params.tangent_index)
    diff = np.abs(printed.W - oracle.W)
    return {name: float(np.max(diff[:, m])) if m.any() else 0.0 for name, m in masks.items()}
