"""Integrate the moving frame and the immersion map along coordinate paths.

The frame is held as a 10x10 matrix ``E`` whose row I is e_I in the fixed
basis.  Along a straight segment x(s) = a + s (b - a), s in [0, 1],

    dE/ds = G(s) E,   G(s) = sum_a (b - a)^a M_a(x(s)),   M_a[I, J] = eta_II W[a, I, J]
    dq/ds = c(s) E,   c(s) = (b - a) . theta(x(s))

and both are advanced together with classical fourth-order Runge-Kutta at a
fixed number of steps per segment.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import expr as _expr
from .clifford import R19, Multivector
from .geometry import DIM, ETA, NDIM, connection_field, frame, frame_generators
from .spin_field import FDConfig

__all__ = [
    "PathSpec",
    "VielbeinField",
    "FrameState",
    "Trajectory",
    "GridSpec",
    "PointCloud",
    "DiscretizationMismatchError",
    "connection_function",
    "initial_state",
    "integrate_frame",
    "frame_trajectory",
    "integrate_position",
    "integrate_path",
    "loop_holonomy",
    "exactness_check",
    "induced_metric",
    "export_pointcloud",
    "write_csv",
    "write_obj",
    "paper_example_immersion",
]

ConnectionFn = Callable[[np.ndarray], np.ndarray]


class DiscretizationMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class PathSpec:
    waypoints: Tuple[Tuple[float, ...], ...]
    steps: int = 256

    def __post_init__(self):
        pts = tuple(tuple(float(v) for v in p) for p in self.waypoints)
        if len(pts) < 2:
            raise ValueError("a path needs at least two waypoints")
        if any(len(p) != NDIM for p in pts):
            raise ValueError("waypoints have four coordinates")
        if int(self.steps) < 1:
            raise ValueError("steps must be at least 1")
        object.__setattr__(self, "waypoints", pts)
        object.__setattr__(self, "steps", int(self.steps))

    def nodes(self) -> np.ndarray:
        """All step endpoints, waypoints included, in path order."""
        out = [np.array(self.waypoints[0])]
        for a, b in zip(self.waypoints[:-1], self.waypoints[1:]):
            a, b = np.array(a), np.array(b)
            for k in range(1, self.steps + 1):
                out.append(a + (b - a) * (k / self.steps))
        return np.array(out)

    def reversed(self) -> "PathSpec":
        return PathSpec(tuple(reversed(self.waypoints)), self.steps)


@dataclass
class VielbeinField:
    """theta_mu^I(x) as a 4x10 table of expressions."""

    exprs: Tuple[Tuple[object, ...], ...]

    def __post_init__(self):
        rows = [tuple(_expr.parse(e) if isinstance(e, str) else e for e in row) for row in self.exprs]
        if len(rows) != NDIM or any(len(r) != DIM for r in rows):
            raise ValueError("a vielbein needs 4 rows of 10 expressions")
        self.exprs = tuple(rows)
        self._const = np.zeros((NDIM, DIM))
        self._live = []
        for mu, row in enumerate(rows):
            for I, e in enumerate(row):
                if isinstance(e, _expr.Num):
                    self._const[mu, I] = e.value
                else:
                    self._live.append((mu, I, e))

    @classmethod
    def identity(cls) -> "VielbeinField":
        return cls(tuple(tuple("1" if I == mu else "0" for I in range(DIM)) for mu in range(NDIM)))

    @classmethod
    def paper_example(cls) -> "VielbeinField":
        """diag(1, 1/(1+r^2), 1/(1+r^2), 1/(1+r^2)) on the tangent block."""
        d = "1/(1 + x1^2 + x2^2 + x3^2)"
        rows = []
        for mu in range(NDIM):
            rows.append(tuple(("1" if mu == 0 else d) if I == mu else "0" for I in range(DIM)))
        return cls(tuple(rows))

    @classmethod
    def from_lists(cls, rows) -> "VielbeinField":
        return cls(tuple(tuple(str(e) for e in row) for row in rows))

    def to_lists(self):
        return [[_expr.to_source(e) for e in row] for row in self.exprs]

    def at(self, x) -> np.ndarray:
        out = self._const.copy()
        x = tuple(float(v) for v in x)
        for mu, I, e in self._live:
            out[mu, I] = _expr.evaluate(e, x)
        return out

    def jacobian(self, x) -> np.ndarray:
        """d[a, mu, I] = d_a theta_mu^I."""
        out = np.zeros((NDIM, NDIM, DIM))
        for mu, I, e in self._live:
            out[:, mu, I] = _expr.eval_dual(e, x).grad
        return out

    def metric(self, x) -> np.ndarray:
        th = self.at(x)
        return th @ np.diag(ETA) @ th.T


@dataclass
class FrameState:
    q: np.ndarray
    E: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).reshape(DIM)
        self.E = np.asarray(self.E, dtype=float).reshape(DIM, DIM)

    @classmethod
    def identity(cls, q=None) -> "FrameState":
        return cls(np.zeros(DIM) if q is None else q, np.eye(DIM))

    @property
    def e(self) -> List[Multivector]:
        return [Multivector({1 << P: self.E[I, P] for P in range(DIM)}, R19) for I in range(DIM)]

    def orthonormality_residual(self) -> float:
        return float(np.max(np.abs(self.E @ np.diag(ETA) @ self.E.T - np.diag(ETA))))

    def copy(self) -> "FrameState":
        return FrameState(self.q.copy(), self.E.copy())


def connection_function(source, method: str = "ad") -> ConnectionFn:
    """Turn a spin-field spec (or a callable x -> W) into x -> W[a, I, J]."""
    if callable(source) and not hasattr(source, "__dataclass_fields__"):
        return source
    if method == "closed":
        from .solutions import closed_connection

        return lambda x: closed_connection(source, x).W
    return lambda x: connection_field(source, x, method=method).W


def initial_state(spec, x, q=None) -> FrameState:
    """Frame e_I = reverse(psi) e_I psi at x, position q (default 0)."""
    return FrameState(np.zeros(DIM) if q is None else q, frame(spec, x).matrix)


# --- stepping --------------------------------------------------------------

@dataclass
class Trajectory:
    """Frames at every step node, plus the Runge-Kutta stage frames per step."""

    path: PathSpec
    nodes: np.ndarray       # (K, 4)
    E: np.ndarray           # (K, 10, 10)
    stages: np.ndarray      # (K-1, 3, 10, 10): E2, E3, E4 of each step
    drift: np.ndarray       # orthonormality residual after every node

    @property
    def final(self) -> np.ndarray:
        return self.E[-1]

    @property
    def max_drift(self) -> float:
        return float(np.max(self.drift))


def _rk4_frame(conn: ConnectionFn, a, b, steps, E, record=None):
    dx = b - a
    h = 1.0 / steps

    def G(s):
        return np.einsum("a,aij->ij", dx, frame_generators(conn(a + s * dx)))

    G0 = G(0.0)
    for k in range(steps):
        s = k * h
        Gm = G(s + 0.5 * h)
        G1 = G(s + h)
        k1 = G0 @ E
        E2 = E + 0.5 * h * k1
        k2 = Gm @ E2
        E3 = E + 0.5 * h * k2
        k3 = Gm @ E3
        E4 = E + h * k3
        k4 = G1 @ E4
        E = E + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if record is not None:
            record(E2, E3, E4, E)
        G0 = G1
    return E


def _rk4_coupled(conn: ConnectionFn, vb: VielbeinField, a, b, steps, q, E):
    # frame and position in one sweep; the position uses the frame stages
    dx = b - a
    h = 1.0 / steps

    def stage(s):
        x = a + s * dx
        return np.einsum("a,aij->ij", dx, frame_generators(conn(x))), dx @ vb.at(x)

    G0, c0 = stage(0.0)
    for k in range(steps):
        s = k * h
        Gm, cm = stage(s + 0.5 * h)
        G1, c1 = stage(s + h)
        k1 = G0 @ E
        E2 = E + 0.5 * h * k1
        k2 = Gm @ E2
        E3 = E + 0.5 * h * k2
        k3 = Gm @ E3
        E4 = E + h * k3
        k4 = G1 @ E4
        q = q + (h / 6.0) * (c0 @ E + 2.0 * cm @ E2 + 2.0 * cm @ E3 + c1 @ E4)
        E = E + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        G0, c0 = G1, c1
    return q, E


def frame_trajectory(source, path: PathSpec, init: FrameState, method: str = "ad") -> Trajectory:
    conn = connection_function(source, method)
    eta = np.diag(ETA)
    Es, stages, drift = [init.E.copy()], [], [init.orthonormality_residual()]

    def record(E2, E3, E4, E):
        stages.append((E2, E3, E4))
        Es.append(E)
        drift.append(float(np.max(np.abs(E @ eta @ E.T - eta))))

    E = init.E.copy()
    for a, b in zip(path.waypoints[:-1], path.waypoints[1:]):
        E = _rk4_frame(conn, np.array(a), np.array(b), path.steps, E, record)
    return Trajectory(path, path.nodes(), np.array(Es), np.array(stages), np.array(drift))


def integrate_frame(source, path: PathSpec, init: FrameState, method: str = "ad") -> Tuple[FrameState, np.ndarray]:
    """Transport the frame along ``path``; returns the final state and per-step drift."""
    traj = frame_trajectory(source, path, init, method)
    return FrameState(init.q, traj.final), traj.drift


def integrate_position(vielbein: VielbeinField, traj: Trajectory, path: Optional[PathSpec] = None,
                       q0=None) -> List[FrameState]:
    """Accumulate q along a frame trajectory computed on the same discretization."""
    if path is not None and (path.steps != traj.path.steps or path.waypoints != traj.path.waypoints):
        raise DiscretizationMismatchError("position path does not match the frame trajectory's discretization")
    q = np.zeros(DIM) if q0 is None else np.asarray(q0, dtype=float)
    out = [FrameState(q, traj.E[0])]
    nodes = traj.nodes
    for k in range(len(nodes) - 1):
        a, b = nodes[k], nodes[k + 1]
        dx = b - a
        c0 = dx @ vielbein.at(a)
        cm = dx @ vielbein.at(0.5 * (a + b))
        c1 = dx @ vielbein.at(b)
        E2, E3, E4 = traj.stages[k]
        q = q + (c0 @ traj.E[k] + 2.0 * cm @ E2 + 2.0 * cm @ E3 + c1 @ E4) / 6.0
        out.append(FrameState(q, traj.E[k + 1]))
    return out


def integrate_path(source, vielbein: VielbeinField, path: PathSpec, init: FrameState, method: str = "ad") -> FrameState:
    """Frame and position at the end of ``path`` in one pass."""
    conn = connection_function(source, method)
    q, E = init.q.copy(), init.E.copy()
    for a, b in zip(path.waypoints[:-1], path.waypoints[1:]):
        q, E = _rk4_coupled(conn, vielbein, np.array(a), np.array(b), path.steps, q, E)
    return FrameState(q, E)


def loop_holonomy(source, base, side: float, plane=(1, 2), steps: int = 64, vielbein: Optional[VielbeinField] = None,
                  init: Optional[FrameState] = None, method: str = "ad") -> Tuple[float, float]:
    """Frame and position mismatch after a closed square loop of the given side."""
    base = np.array(base, dtype=float)
    u, v = np.zeros(NDIM), np.zeros(NDIM)
    u[plane[0]] = side
    v[plane[1]] = side
    corners = (base, base + u, base + u + v, base + v, base)
    path = PathSpec(tuple(map(tuple, corners)), steps)
    start = init or FrameState.identity()
    end = integrate_path(source, vielbein or VielbeinField.identity(), path, start, method)
    return float(np.max(np.abs(end.E - start.E))), float(np.max(np.abs(end.q - start.q)))


# --- checks ----------------------------------------------------------------

def exactness_check(vielbein: VielbeinField, source, x, fd: Optional[FDConfig] = None, method: str = "ad") -> float:
    """Max over (a, b, I) of |d_a th_b^I - d_b th_a^I - (th_a^K w_bK^I - th_b^K w_aK^I)|.

    The vielbein derivatives are exact (dual numbers); ``method`` selects how
    the connection is obtained.
    """
    conn = connection_function(source, method)
    x = np.array(x, dtype=float)
    th = vielbein.at(x)
    dth = vielbein.jacobian(x)
    M = frame_generators(conn(x))                  # M[b, K, I] = omega_bK^I
    curl = dth - np.swapaxes(dth, 0, 1)            # [a, b, I]
    tw = np.einsum("aK,bKI->abI", th, M)
    res = curl - (tw - np.swapaxes(tw, 0, 1))
    return float(np.max(np.abs(res)))


def induced_metric(source, vielbein: VielbeinField, state: FrameState, x, delta: float = 1e-3, steps: int = 4,
                   method: str = "ad") -> np.ndarray:
    """g_mn = <d_m q, d_n q> with d q from central differences of integrated q.

    Short paths of length ``delta`` are integrated from ``state`` at ``x`` in
    each coordinate direction.
    """
    x = np.array(x, dtype=float)
    conn = connection_function(source, method)
    dq = np.zeros((NDIM, DIM))
    for m in range(NDIM):
        step = np.zeros(NDIM)
        step[m] = delta
        qp, _ = _rk4_coupled(conn, vielbein, x, x + step, steps, state.q, state.E)
        qm, _ = _rk4_coupled(conn, vielbein, x, x - step, steps, state.q, state.E)
        dq[m] = (qp - qm) / (2 * delta)
    return dq @ np.diag(ETA) @ dq.T


# --- grid export -----------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Grid over (x1, x2, x3) at fixed x0."""

    x0: float
    ranges: Tuple[Tuple[float, float], ...]
    counts: Tuple[int, ...]

    def __post_init__(self):
        ranges = tuple((float(lo), float(hi)) for lo, hi in self.ranges)
        counts = tuple(int(c) for c in self.counts)
        if len(ranges) != 3 or len(counts) != 3:
            raise ValueError("grids span x1, x2, x3: three ranges and three counts")
        if any(c < 1 for c in counts):
            raise ValueError("grid counts must be positive")
        object.__setattr__(self, "ranges", ranges)
        object.__setattr__(self, "counts", counts)

    def axis(self, k: int) -> np.ndarray:
        lo, hi = self.ranges[k]
        return np.linspace(lo, hi, self.counts[k]) if self.counts[k] > 1 else np.array([lo])

    def point(self, idx) -> np.ndarray:
        return np.array([self.x0] + [self.axis(k)[idx[k]] for k in range(3)])

    def indices(self):
        n1, n2, n3 = self.counts
        return [(i, j, k) for i in range(n1) for j in range(n2) for k in range(n3)]

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))


@dataclass
class PointCloud:
    grid: GridSpec
    points: np.ndarray   # (N, 4), lexicographic grid order
    q: np.ndarray        # (N, 10)
    E: np.ndarray        # (N, 10, 10)
    max_drift: float = 0.0
    index: dict = field(default_factory=dict)

    def state(self, idx) -> FrameState:
        n = self.index[tuple(idx)]
        return FrameState(self.q[n], self.E[n])


def _comb_edges(counts, order):
    # spanning tree: full lines along the first axis, then the second, then the third
    edges = []
    seen = {(0, 0, 0)}
    for axis in order:
        frontier = sorted(seen)
        for start in frontier:
            cur = start
            for _ in range(counts[axis] - 1 - start[axis]):
                nxt = list(cur)
                nxt[axis] += 1
                nxt = tuple(nxt)
                edges.append((cur, nxt))
                seen.add(nxt)
                cur = nxt
    return edges


def export_pointcloud(source, vielbein: VielbeinField, grid: GridSpec, init: Optional[FrameState] = None,
                      steps_per_unit: float = 32.0, order: Sequence[int] = (0, 1, 2),
                      method: str = "ad") -> PointCloud:
    """Integrate q and the frame over a spanning tree of the grid from its first corner.

    Each edge gets ``ceil(length * steps_per_unit)`` Runge-Kutta steps.

    ``order`` fixes the axis sequence of the comb-shaped tree; exporting with a
    different order gives an independent tree for path-independence checks.
    """
    conn = connection_function(source, method)
    if init is None:
        init = initial_state(source, grid.point((0, 0, 0)))
    states = {(0, 0, 0): (init.q.copy(), init.E.copy())}
    eta = np.diag(ETA)
    drift = 0.0
    for u, v in _comb_edges(grid.counts, tuple(order)):
        q, E = states[u]
        a, b = grid.point(u), grid.point(v)
        steps = max(1, int(np.ceil(np.linalg.norm(b - a) * steps_per_unit)))
        q, E = _rk4_coupled(conn, vielbein, a, b, steps, q, E)
        states[v] = (q, E)
        drift = max(drift, float(np.max(np.abs(E @ eta @ E.T - eta))))
    idx = grid.indices()
    pts = np.array([grid.point(i) for i in idx])
    qs = np.array([states[i][0] for i in idx])
    Es = np.array([states[i][1] for i in idx])
    return PointCloud(grid, pts, qs, Es, drift, {i: n for n, i in enumerate(idx)})


def _fmt(v: float) -> str:
    return repr(float(v))


def write_csv(cloud: PointCloud, path) -> None:
    header = ",".join([f"x{k}" for k in range(NDIM)] + [f"q{k}" for k in range(DIM)])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for x, q in zip(cloud.points, cloud.q):
            fh.write(",".join(_fmt(v) for v in list(x) + list(q)) + "\n")


def write_obj(cloud: PointCloud, path, projection: Sequence[int] = (1, 2, 3)) -> None:
    if len(projection) != 3 or not all(0 <= p < DIM for p in projection):
        raise ValueError("projection names three ambient components in 0..9")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for q in cloud.q:
            fh.write("v " + " ".join(_fmt(q[p]) for p in projection) + "\n")


def paper_example_immersion(x) -> np.ndarray:
    """Closed-form immersion map of the preset type-A example."""
    x = np.asarray(x, dtype=float)
    d = 1.0 + x[1] ** 2 + x[2] ** 2 + x[3] ** 2
    q = np.zeros(DIM)
    q[0] = x[0]
    q[1:4] = x[1:4] / d
    q[5] = 1.0 / d
    return q
