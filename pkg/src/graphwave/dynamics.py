"""Time stepping of the discrete wave equation on a graph.

Interior lattice sites follow the leapfrog stencil

    u[j, t+1] = u[j+1, t] + u[j-1, t] - u[j, t-1]

and each internal vertex ``v`` of degree ``p`` carrying nodal mass ``m``
obeys

    -(1+m) u(v,t+1) - (1+m) u(v,t-1) + (2+2m-p) u(v,t) + sum_nb u(nb,t) = 0.

``m = -1`` degenerates to the instantaneous averaging constraint
``u(v,t) = mean_nb u(nb,t)``. Fields may carry trailing batch axes so that
many control signals can be propagated through the same graph at once.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .graph import CONTROL, DiscreteGraph

DIRECT = "direct"
UNIT_MASS = "unit-mass"
MATCHED = "matched"

_SINGULAR_TOL = 1e-9


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class NodeCondition:
    """Nodal masses for every internal vertex of a particular graph.

    ``name`` is a label used in reports (``direct``, ``unit-mass``,
    ``matched`` or ``mass=<value>``).
    """

    masses: Mapping[int, float]
    name: str = "custom"

    def __post_init__(self):
        for v, m in self.masses.items():
            if m != -1.0 and abs(1.0 + m) < _SINGULAR_TOL:
                raise SimulationError(f"mass {m!r} at vertex {v} is too close to -1")

    @classmethod
    def uniform(cls, graph: DiscreteGraph, mass: float, name: str | None = None) -> "NodeCondition":
        return cls({v: float(mass) for v in graph.internal}, name or f"mass={mass:g}")

    @classmethod
    def direct_kirchhoff(cls, graph: DiscreteGraph) -> "NodeCondition":
        return cls.uniform(graph, -1.0, DIRECT)

    @classmethod
    def unit_mass(cls, graph: DiscreteGraph) -> "NodeCondition":
        return cls.uniform(graph, 0.0, UNIT_MASS)

    @classmethod
    def matched(cls, graph: DiscreteGraph) -> "NodeCondition":
        return cls({v: (graph.degree(v) - 2) / 2 for v in graph.internal}, MATCHED)

    @classmethod
    def parse(cls, text: str, graph: DiscreteGraph) -> "NodeCondition":
        """Build a condition from ``direct|unit-mass|matched|mass=<real>``."""
        if text == DIRECT:
            return cls.direct_kirchhoff(graph)
        if text == UNIT_MASS:
            return cls.unit_mass(graph)
        if text == MATCHED:
            return cls.matched(graph)
        if text.startswith("mass="):
            try:
                m = float(text[5:])
            except ValueError:
                raise SimulationError(f"bad mass value in {text!r}") from None
            return cls.uniform(graph, m, text)
        raise SimulationError(f"unknown condition {text!r}")

    def mass(self, v: int) -> float:
        return self.masses[v]


def _interior_index(graph):
    """Global indices of interior sites and of their left/right neighbours."""
    mid, left, right = [], [], []
    for e in graph.edges:
        s = graph.edge_sites(e)
        mid.append(s[1:-1])
        left.append(s[:-2])
        right.append(s[2:])
    return np.concatenate(mid), np.concatenate(left), np.concatenate(right)


class _Stepper:
    """Precomputed index maps for one (graph, condition) pair."""

    def __init__(self, graph: DiscreteGraph, condition: NodeCondition):
        missing = set(graph.internal) - set(condition.masses)
        if missing:
            raise SimulationError(f"no nodal mass for internal vertices {sorted(missing)}")
        self.graph = graph
        self.mid, self.left, self.right = _interior_index(graph)

        self.control_vertices = graph.controlled
        self.boundary_sites = np.array([graph.vertex_site(v) for v in graph.boundary], dtype=np.intp)

        vertex_sites = {graph.vertex_site(v) for v in graph.vertices}
        explicit, constrained = [], []
        for v in graph.internal:
            (constrained if condition.mass(v) == -1.0 else explicit).append(v)
            if condition.mass(v) == -1.0 and vertex_sites & set(graph.neighbor_sites(v)):
                raise SimulationError(f"constrained vertex {v} has a vertex as lattice neighbour")

        self.exp_sites = np.array([graph.vertex_site(v) for v in explicit], dtype=np.intp)
        self.exp_nb = self._neighbor_matrix(explicit)
        m = np.array([condition.mass(v) for v in explicit])
        p = np.array([graph.degree(v) for v in explicit])
        self.exp_inv = 1.0 / (1.0 + m)
        self.exp_self = (2.0 + 2.0 * m - p) * self.exp_inv

        self.con_sites = np.array([graph.vertex_site(v) for v in constrained], dtype=np.intp)
        self.con_nb = self._neighbor_matrix(constrained)
        self.con_inv = 1.0 / np.array([graph.degree(v) for v in constrained], dtype=float)

    def _neighbor_matrix(self, verts):
        rows, cols = [], []
        for r, v in enumerate(verts):
            for c in self.graph.neighbor_sites(v):
                rows.append(r)
                cols.append(c)
        return sp.csr_matrix(
            (np.ones(len(rows)), (rows, cols)), shape=(len(verts), self.graph.n_sites)
        )

    @staticmethod
    def _col(vec, like):
        return vec.reshape(vec.shape + (1,) * (like.ndim - 1))

    def __call__(self, cur, prev, boundary_values):
        nxt = np.empty_like(cur)
        nxt[self.mid] = cur[self.left] + cur[self.right] - prev[self.mid]
        nxt[self.boundary_sites] = boundary_values
        if len(self.exp_sites):
            nb = self.exp_nb @ cur
            nxt[self.exp_sites] = (
                self._col(self.exp_self, cur) * cur[self.exp_sites]
                + self._col(self.exp_inv, cur) * nb
                - prev[self.exp_sites]
            )
        self.apply_constraints(nxt)
        return nxt

    def apply_constraints(self, layer):
        if len(self.con_sites):
            layer[self.con_sites] = self._col(self.con_inv, layer) * (self.con_nb @ layer)


def _control_matrix(graph: DiscreteGraph, controls, horizon: int):
    """Zero-extended control values, shape ``(T+1, n_boundary, *batch)``."""
    controls = dict(controls or {})
    for v in controls:
        if graph.role(v) != CONTROL:
            raise SimulationError(f"vertex {v} is not a controlled boundary vertex")
    for v in graph.controlled:
        if v not in controls:
            raise SimulationError(f"missing control signal for vertex {v}")
    arrays = {v: np.asarray(f, dtype=float) for v, f in controls.items()}
    batch = ()
    for a in arrays.values():
        if a.ndim > 1:
            batch = a.shape[1:]
    out = np.zeros((horizon + 1, len(graph.boundary)) + batch)
    for k, v in enumerate(graph.boundary):
        if v in arrays:
            a = arrays[v]
            a = a.reshape(a.shape + (1,) * (1 + len(batch) - a.ndim))
            n = min(len(a), horizon + 1)
            out[:n, k] = a[:n]
    return out


class Trajectory:
    """Field ``u`` on all global sites for time layers ``-1..T``.

    ``field[t + 1, s]`` is the value at global site ``s`` and time ``t``;
    trailing axes, if any, index a batch of independent runs.
    """

    def __init__(self, graph: DiscreteGraph, field: np.ndarray):
        self.graph = graph
        self.field = field
        self.horizon = field.shape[0] - 2

    def layer(self, t: int) -> np.ndarray:
        self._check_t(t)
        return self.field[t + 1]

    def u(self, edge: int, j: int, t: int):
        self._check_t(t)
        return self.field[t + 1, self.graph.edge_sites(edge)[j]]

    def node(self, v: int) -> np.ndarray:
        """Vertex value for ``t = -1..T``."""
        return self.field[:, self.graph.vertex_site(v)]

    def edge_array(self, edge: int) -> np.ndarray:
        """Array of shape ``(N_e + 1, T + 2)`` indexed ``[j, t + 1]``."""
        return np.swapaxes(self.field[:, self.graph.edge_sites(edge)], 0, 1)

    def _check_t(self, t):
        if not -1 <= t <= self.horizon:
            raise IndexError(f"time {t} outside -1..{self.horizon}")


def step(graph, condition, layer_t, layer_t_minus_1, controls, t):
    """Advance one time layer; returns the field at ``t + 1``.

    ``controls`` maps controlled boundary vertices to signals (zero-extended).
    """
    if t < 0:
        raise SimulationError("t must be nonnegative")
    bvals = _control_matrix(graph, controls, t + 1)[t + 1]
    cur = np.asarray(layer_t, dtype=float)
    return _Stepper(graph, condition)(cur, np.asarray(layer_t_minus_1, dtype=float), bvals)


def simulate(graph: DiscreteGraph, condition: NodeCondition, controls, horizon: int) -> Trajectory:
    """Run from rest up to time ``horizon``.

    Boundary vertices take their control value ``f_t`` (zero-extended) from
    ``t = 0`` on; clamped ones stay at zero. Signals of shape ``(L, *batch)``
    run a batch of simulations in one pass.
    """
    if horizon < 0:
        raise SimulationError("horizon must be nonnegative")
    bvals = _control_matrix(graph, controls, horizon)
    stepper = _Stepper(graph, condition)
    field = np.zeros((horizon + 2, graph.n_sites) + bvals.shape[2:])
    field[1, stepper.boundary_sites] = bvals[0]
    stepper.apply_constraints(field[1])
    for t in range(horizon):
        field[t + 2] = stepper(field[t + 1], field[t], bvals[t + 1])
    return Trajectory(graph, field)


@dataclass(frozen=True)
class EnergyReport:
    t: int
    kinetic: float
    potential: float


def _vertex_weights(graph, condition):
    w = np.ones(len(graph.vertices))
    if condition is not None:
        for v in graph.internal:
            w[graph.vertex_site(v)] += condition.mass(v)
    return w


def kinetic_energy(traj: Trajectory, t: int, condition: NodeCondition | None = None):
    """Discrete kinetic energy at ``t``; nodal masses add to the unit vertex mass."""
    g = traj.graph
    if not 1 <= t <= traj.horizon:
        raise IndexError(f"kinetic energy needs 1 <= t <= {traj.horizon}")
    du = traj.field[t + 1] - traj.field[t]
    nv = len(g.vertices)
    w = _vertex_weights(g, condition).reshape((nv,) + (1,) * (du.ndim - 1))
    return 0.5 * (np.sum(du[nv:] ** 2, axis=0) + np.sum(w * du[:nv] ** 2, axis=0))


def potential_energy(traj: Trajectory, t: int):
    g = traj.graph
    if not 0 <= t <= traj.horizon:
        raise IndexError(f"potential energy needs 0 <= t <= {traj.horizon}")
    layer = traj.field[t + 1]
    total = 0.0
    for e in g.edges:
        total = total + np.sum(np.diff(layer[g.edge_sites(e)], axis=0) ** 2, axis=0)
    return 0.5 * total


def energies(traj: Trajectory, t: int, condition: NodeCondition | None = None) -> EnergyReport:
    return EnergyReport(t, float(kinetic_energy(traj, t, condition)), float(potential_energy(traj, t)))


def action(traj: Trajectory, condition: NodeCondition | None = None):
    """``sum_{t=1..T} T_D(t) - sum_{t=0..T} U_D(t)``."""
    kin = sum(kinetic_energy(traj, t, condition) for t in range(1, traj.horizon + 1))
    pot = sum(potential_energy(traj, t) for t in range(0, traj.horizon + 1))
    return kin - pot


def stencil_residual(traj: Trajectory) -> np.ndarray:
    """Interior residual ``u[j,t+1] + u[j,t-1] - u[j+1,t] - u[j-1,t]`` for ``t = 0..T-1``."""
    mid, left, right = _interior_index(traj.graph)
    f = traj.field
    return f[2:, mid] + f[:-2, mid] - f[1:-1, right] - f[1:-1, left]


def node_residual(traj: Trajectory, condition: NodeCondition) -> dict[int, np.ndarray]:
    """Per internal vertex, the nodal-condition residual over admissible ``t``.

    For ``m != -1`` this covers ``t = 0..T-1``; for ``m = -1`` the
    averaging constraint is checked on ``t = 0..T``.
    """
    g = traj.graph
    f = traj.field
    out = {}
    for v in g.internal:
        m, p = condition.mass(v), g.degree(v)
        s = g.vertex_site(v)
        nb = sum(f[:, n] for n in g.neighbor_sites(v))
        if m == -1.0:
            out[v] = (nb - p * f[:, s])[1:]
        else:
            out[v] = (
                -(1 + m) * f[2:, s] - (1 + m) * f[:-2, s] + (2 + 2 * m - p) * f[1:-1, s] + nb[1:-1]
            )
    return out


def write_trajectory_csv(traj: Trajectory, stream=None) -> str:
    """CSV ``edge,j,t,value`` sorted by (edge, t, j); vertex values repeat per edge."""
    if traj.field.ndim != 2:
        raise SimulationError("only unbatched trajectories can be exported")
    buf = stream if stream is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["edge", "j", "t", "value"])
    for e in traj.graph.edges:
        arr = traj.edge_array(e)
        for t in range(-1, traj.horizon + 1):
            for j in range(arr.shape[0]):
                w.writerow([e, j, t, repr(float(arr[j, t + 1]))])
    return buf.getvalue() if stream is None else ""


def read_trajectory_csv(graph: DiscreteGraph, text: str) -> Trajectory:
    rows = list(csv.DictReader(io.StringIO(text)))
    horizon = max(int(r["t"]) for r in rows)
    field = np.zeros((horizon + 2, graph.n_sites))
    for r in rows:
        site = graph.edge_sites(int(r["edge"]))[int(r["j"])]
        field[int(r["t"]) + 1, site] = float(r["value"])
    return Trajectory(graph, field)


def read_control_csv(text: str) -> np.ndarray:
    """Parse a ``t,value`` control file into a dense zero-filled signal."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["t", "value"]:
        raise SimulationError("control CSV must start with header 't,value'")
    pairs = []
    for k, row in enumerate(reader, 2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 2:
            raise SimulationError(f"control CSV line {k}: expected 2 fields")
        try:
            t, val = int(row[0]), float(row[1])
        except ValueError:
            raise SimulationError(f"control CSV line {k}: bad value {row!r}") from None
        if t < 0:
            raise SimulationError(f"control CSV line {k}: negative time")
        pairs.append((t, val))
    sig = np.zeros(max((t for t, _ in pairs), default=-1) + 1)
    for t, val in pairs:
        sig[t] = val
    return sig


def write_control_csv(signal) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "value"])
    for t, val in enumerate(np.asarray(signal, dtype=float)):
        w.writerow([t, repr(float(val))])
    return buf.getvalue()
