"""Connection blocks, moving frames and curvature of a spin-field immersion.

The full ambient connection at a point is stored as one array ``W`` of shape
(4, 10, 10): ``W[a, I, J]`` is the coefficient with both frame indices up,
antisymmetric in (I, J).  The blocks are views into it:

* ``omega[a, mu, nu] = W[a, mu, nu]``      tangent-tangent, mu, nu in 0..3
* ``H[a, mu, i - 4]  = W[a, mu, i]``       tangent-normal,  i in 4..9
* ``A[a, i - 4, j - 4] = W[a, i, j]``      normal-normal

Mixed-variance components follow from lowering with the ambient metric, e.g.
``omega_a^mu_nu = W[a, mu, nu] * eta[nu]``.  Derivative arrays are laid out as
``dW[a, b] = d_a W_b``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .clifford import R19, Multivector, basis_vector, grade_project, indices_from_mask, reverse, sandwich
from .spin_field import (
    Constant,
    FDConfig,
    PaperExample,
    Rotation,
    TypeA,
    TypeB,
    evaluate,
    field_jet,
    killing_extract,
)

__all__ = [
    "NDIM",
    "DIM",
    "ETA",
    "ConnectionAtPoint",
    "CurvatureAtPoint",
    "FrameAtPoint",
    "FrameGradeError",
    "split_connection",
    "reconstruct_bivectors",
    "frame",
    "connection_field",
    "connection_derivatives",
    "curvature_from_connection",
    "curvature",
    "gcr_residuals",
    "ambient_curvature",
    "frame_generators",
    "curvature_csv_rows",
]

NDIM = 4
DIM = 10
ETA = np.array(R19.metric_diag, dtype=float)
ETA_T = ETA[:NDIM]
_PAIRS = [(I, J) for I in range(DIM) for J in range(I + 1, DIM)]


class FrameGradeError(ValueError):
    def __init__(self, index: int, residual: float):
        super().__init__(f"frame vector e[{index}] is not grade 1 (off-grade residual {residual:.3e})")
        self.index = index
        self.residual = residual


@dataclass
class ConnectionAtPoint:
    W: np.ndarray
    grade2_residual: np.ndarray = field(default_factory=lambda: np.zeros(NDIM))
    x: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        if self.W.shape != (NDIM, DIM, DIM):
            raise ValueError(f"connection array must have shape (4, 10, 10), got {self.W.shape}")

    @classmethod
    def zero(cls, x=None) -> "ConnectionAtPoint":
        return cls(np.zeros((NDIM, DIM, DIM)), x=x)

    @classmethod
    def from_blocks(cls, omega, H, A, x=None) -> "ConnectionAtPoint":
        W = np.zeros((NDIM, DIM, DIM))
        W[:, :NDIM, :NDIM] = omega
        W[:, :NDIM, NDIM:] = H
        W[:, NDIM:, :NDIM] = -np.swapaxes(np.asarray(H, dtype=float), 1, 2)
        W[:, NDIM:, NDIM:] = A
        return cls(W, x=x)

    @property
    def omega(self) -> np.ndarray:
        return self.W[:, :NDIM, :NDIM]

    @property
    def H(self) -> np.ndarray:
        return self.W[:, :NDIM, NDIM:]

    @property
    def A(self) -> np.ndarray:
        return self.W[:, NDIM:, NDIM:]

    def antisymmetry_residual(self) -> float:
        return float(np.max(np.abs(self.W + np.swapaxes(self.W, 1, 2))))

    def max_diff(self, other: "ConnectionAtPoint") -> float:
        return float(np.max(np.abs(self.W - other.W)))

    def bivectors(self) -> List[Multivector]:
        return reconstruct_bivectors(self.W)

    def to_dict(self) -> dict:
        out = {"omega": [], "H": [], "A": []}
        for a in range(NDIM):
            for I, J in _PAIRS:
                key = "omega" if J < NDIM else "A" if I >= NDIM else "H"
                out[key].append([a, I, J, float(self.W[a, I, J])])
        out["grade2_residual"] = [float(v) for v in self.grade2_residual]
        if self.x is not None:
            out["x"] = list(self.x)
        return out


def split_connection(K: Sequence[Multivector], x=None) -> ConnectionAtPoint:
    """Read (omega, H, A) off the Killing bivectors, two times each blade coefficient."""
    if len(K) != NDIM:
        raise ValueError("need one bivector per coordinate direction")
    W = np.zeros((NDIM, DIM, DIM))
    res = np.zeros(NDIM)
    for a, k in enumerate(K):
        off = 0.0
        for mask, c in k:
            if mask.bit_count() != 2:
                off = max(off, abs(c))
                continue
            I, J = indices_from_mask(mask)
            W[a, I, J] = 2.0 * c
            W[a, J, I] = -2.0 * c
        res[a] = off
    return ConnectionAtPoint(W, res, x)


def reconstruct_bivectors(W) -> List[Multivector]:
    """Inverse of :func:`split_connection`: K_a = sum_{I<J} W[a,I,J]/2 e_I e_J."""
    W = np.asarray(W, dtype=float)
    return [
        Multivector({(1 << I) | (1 << J): 0.5 * W[a, I, J] for I, J in _PAIRS}, R19)
        for a in range(W.shape[0])
    ]


def frame_generators(W) -> np.ndarray:
    """Matrices M_a with d_a E = M_a E for the frame matrix E (rows e_I).

    M_a[I, J] = omega_a_I^J = eta_II W[a, I, J].
    """
    return ETA[None, :, None] * np.asarray(W, dtype=float)


# --- frames ----------------------------------------------------------------

@dataclass
class FrameAtPoint:
    e: List[Multivector]
    grade_residuals: List[float]

    @property
    def matrix(self) -> np.ndarray:
        """Row I holds the fixed-frame components of e_I."""
        return np.array([v.vector_part() for v in self.e])

    def gram(self) -> np.ndarray:
        E = self.matrix
        return E @ np.diag(ETA) @ E.T

    def orthonormality_residual(self) -> float:
        return float(np.max(np.abs(self.gram() - np.diag(ETA))))


def frame(spec, x, tol: float = 1e-10) -> FrameAtPoint:
    """e_I = reverse(psi) e_I psi; raises FrameGradeError on a non-vector e_I."""
    psi = spec if isinstance(spec, Multivector) else evaluate(spec, x)
    es, res = [], []
    for I in range(DIM):
        v = sandwich(psi, basis_vector(I, psi.sig))
        r = (v - grade_project(v, 1)).max_abs()
        if r >= tol:
            raise FrameGradeError(I, r)
        es.append(v)
        res.append(r)
    return FrameAtPoint(es, res)


# --- connection fields -----------------------------------------------------

def connection_field(spec, x, fd: Optional[FDConfig] = None, method: str = "ad") -> ConnectionAtPoint:
    """Extracted connection; grade2_residual records any non-bivector part of K."""
    if method == "ad":
        # lean path: no reconstruction or normalization diagnostics
        jet = field_jet(spec, x, 1)
        rpsi = reverse(jet.value)
        return split_connection([d * rpsi for d in jet.d], tuple(float(v) for v in x))
    data = killing_extract(spec, x, fd, method)
    return split_connection(data.K, data.x)


def _has_closed_form(spec) -> bool:
    return isinstance(spec, (TypeA, TypeB, Rotation, PaperExample, Constant))


def _derivatives_jet(spec, x):
    jet = field_jet(spec, x, 2)
    rpsi = reverse(jet.value)
    K = [jet.d[b] * rpsi for b in range(NDIM)]
    conn = split_connection(K, tuple(float(v) for v in x))
    dW = np.zeros((NDIM, NDIM, DIM, DIM))
    for a in range(NDIM):
        rda = reverse(jet.d[a])
        dK = [jet.dd[a][b] * rpsi + jet.d[b] * rda for b in range(NDIM)]
        dW[a] = split_connection(dK).W
    return conn, dW


def _derivatives_fd(spec, x, fd: FDConfig):
    h = fd.step
    x0 = np.array(x, dtype=float)
    conn = connection_field(spec, x0)
    dW = np.zeros((NDIM, NDIM, DIM, DIM))
    for a in range(NDIM):
        xp, xm = x0.copy(), x0.copy()
        xp[a] += h
        xm[a] -= h
        dW[a] = (connection_field(spec, xp).W - connection_field(spec, xm).W) / (2 * h)
    return conn, dW


def connection_derivatives(spec, x, fd: Optional[FDConfig] = None, method: str = "auto"):
    """Connection at ``x`` and its coordinate derivatives ``dW[a, b] = d_a W_b``.

    ``closed`` differentiates the closed-form connections with dual numbers,
    ``jet`` differentiates K = (d psi) reverse(psi) using second-order jets of
    psi, ``fd`` takes central differences of the extracted connection.
    ``auto`` picks ``closed`` when the family has one and ``jet`` otherwise.
    """
    if method == "auto":
        method = "closed" if _has_closed_form(spec) else "jet"
    if method == "closed":
        from .solutions import closed_connection_derivatives

        return closed_connection_derivatives(spec, x)
    if method == "jet":
        return _derivatives_jet(spec, x)
    if method == "fd":
        return _derivatives_fd(spec, x, fd or FDConfig())
    raise ValueError(f"unknown derivative method {method!r}")


# --- curvature -------------------------------------------------------------

@dataclass
class CurvatureAtPoint:
    R: np.ndarray          # R[a, b, mu, nu]
    F: np.ndarray          # F[a, b, i-4, j-4]
    gauss: np.ndarray      # tangent block of the ambient curvature
    codazzi: np.ndarray    # tangent-normal block
    ricci: np.ndarray      # normal block
    omega_full: np.ndarray  # full (4, 4, 10, 10) ambient curvature
    x: Optional[Tuple[float, ...]] = None

    @property
    def gauss_residual(self) -> float:
        return float(np.max(np.abs(self.gauss)))

    @property
    def codazzi_residual(self) -> float:
        return float(np.max(np.abs(self.codazzi)))

    @property
    def ricci_residual(self) -> float:
        return float(np.max(np.abs(self.ricci)))

    @property
    def flatness_residual(self) -> float:
        return float(np.max(np.abs(self.omega_full)))

    def residuals(self) -> Tuple[float, float, float]:
        return self.gauss_residual, self.codazzi_residual, self.ricci_residual

    def to_dict(self) -> dict:
        R = [[a, b, m, n, float(self.R[a, b, m, n])]
             for a in range(NDIM) for b in range(a + 1, NDIM)
             for m in range(NDIM) for n in range(m + 1, NDIM)]
        F = [[a, b, i + NDIM, j + NDIM, float(self.F[a, b, i, j])]
             for a in range(NDIM) for b in range(a + 1, NDIM)
             for i in range(DIM - NDIM) for j in range(i + 1, DIM - NDIM)]
        out = {
            "R": R,
            "F": F,
            "gauss_residual": self.gauss_residual,
            "codazzi_residual": self.codazzi_residual,
            "ricci_residual": self.ricci_residual,
            "flatness_residual": self.flatness_residual,
        }
        if self.x is not None:
            out["x"] = list(self.x)
        return out


def curvature_csv_rows(curv: CurvatureAtPoint):
    """Flatten R and F into (block, alpha, beta, mu, nu, value) rows."""
    d = curv.to_dict()
    for block in ("R", "F"):
        for a, b, m, n, v in d[block]:
            yield block, a, b, m, n, v


def _two_form(dX):
    return dX - np.swapaxes(dX, 0, 1)


def _wedge(X, metric, Y):
    # (X wedge Y)_{ab} = X_a g Y_b - X_b g Y_a for stacks of matrices
    P = np.einsum("aij,j,bjk->abik", X, metric, Y)
    return P - np.swapaxes(P, 0, 1)


def curvature_from_connection(W, dW, x=None) -> CurvatureAtPoint:
    W = np.asarray(W, dtype=float)
    dW = np.asarray(dW, dtype=float)
    t, n = slice(0, NDIM), slice(NDIM, DIM)
    omega, H, A = W[:, t, t], W[:, t, n], W[:, n, n]
    d_omega, dH, dA = dW[:, :, t, t], dW[:, :, t, n], dW[:, :, n, n]
    ones_n = np.ones(DIM - NDIM)

    R = _two_form(d_omega) - _wedge(omega, ETA_T, omega)
    F = _two_form(dA) - _wedge(A, ones_n, A)
    HT = np.swapaxes(H, 1, 2)
    gauss = R + _wedge(H, ones_n, HT)
    codazzi = _two_form(dH) - _wedge(omega, ETA_T, H) - _wedge(H, ones_n, A)
    ricci = F + _wedge(HT, ETA_T, H)
    full = _two_form(dW) - _wedge(W, ETA, W)
    return CurvatureAtPoint(R, F, gauss, codazzi, ricci, full, x)


def curvature(spec, x, fd: Optional[FDConfig] = None, method: str = "auto") -> CurvatureAtPoint:
    conn, dW = connection_derivatives(spec, x, fd, method)
    return curvature_from_connection(conn.W, dW, tuple(float(v) for v in x))


def gcr_residuals(spec, x, fd: Optional[FDConfig] = None, method: str = "auto") -> Tuple[float, float, float]:
    return curvature(spec, x, fd, method).residuals()


def ambient_curvature(spec, x, fd: Optional[FDConfig] = None, method: str = "auto") -> np.ndarray:
    return curvature(spec, x, fd, method).omega_full
