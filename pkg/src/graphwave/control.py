"""Boundary shape control on the 3-star.

Controls act at ``v_1`` and ``v_2``; ``v_3`` is clamped and the centre
``v_4`` carries a nodal mass (matched by default). The centre trace ``g``
is read off the target on edge 3, one outer control (the "driver") is
solved so the centre follows ``g``, and both outer controls are then
completed so edges 1 and 2 match their targets at the final time. Every
equation is triangular in the control values, so the solve is plain
back-substitution on the interval formulas.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .closed_form import StarGeometry, interval_left, interval_right
from .dynamics import NodeCondition, simulate

_CONSISTENCY_TOL = 1e-12


class ControlError(ValueError):
    pass


@dataclass
class ShapeTarget:
    """Prescribed displacement ``phi^i_j`` for ``j = 1..N_i`` on each edge.

    The last entry of every edge is the centre value and must agree across
    edges. ``phi1_0``/``phi2_0`` are optional final values at ``v_1``/``v_2``;
    only the explicit equal-length formulas use them. Arrays may carry
    trailing batch axes.
    """

    phi1: np.ndarray
    phi2: np.ndarray
    phi3: np.ndarray
    phi1_0: float | np.ndarray = 0.0
    phi2_0: float | np.ndarray = 0.0

    def __post_init__(self):
        self.phi1 = np.asarray(self.phi1, dtype=float)
        self.phi2 = np.asarray(self.phi2, dtype=float)
        self.phi3 = np.asarray(self.phi3, dtype=float)
        ends = np.stack([self.phi1[-1], self.phi2[-1], self.phi3[-1]])
        scale = max(1.0, float(np.max(np.abs(ends))))
        if np.max(np.ptp(ends, axis=0)) > 1e-12 * scale:
            raise ControlError("target centre values differ between edges")

    def check(self, geom: StarGeometry):
        for i, (phi, n) in enumerate(zip(self.edges, geom.lengths), 1):
            if len(phi) != n:
                raise ControlError(f"target on edge {i} has {len(phi)} values, expected {n}")

    @property
    def edges(self):
        return (self.phi1, self.phi2, self.phi3)

    @classmethod
    def random(cls, geom: StarGeometry, rng, size=None) -> "ShapeTarget":
        """Random target with a shared centre value; ``size`` adds a batch axis."""
        extra = () if size is None else (size,)
        centre = rng.standard_normal(extra)
        phis = []
        for n in geom.lengths:
            phi = rng.standard_normal((n,) + extra)
            phi[-1] = centre
            phis.append(phi)
        return cls(*phis)

    def scaled(self, alpha) -> "ShapeTarget":
        return ShapeTarget(*(alpha * p for p in self.edges), alpha * self.phi1_0, alpha * self.phi2_0)


@dataclass
class ControlPair:
    """Control values ``f1``, ``f2`` at ``t = 0..T-1``."""

    f1: np.ndarray
    f2: np.ndarray
    horizon: int


@dataclass
class ResidualReport:
    max_residual: float
    targets: dict[int, np.ndarray] = field(default_factory=dict)
    actual: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def mismatch(self) -> dict[int, np.ndarray]:
        return {e: self.actual[e] - self.targets[e] for e in self.targets}

    def ok(self, tol: float = 1e-10) -> bool:
        return self.max_residual <= tol


def optimal_time(geom: StarGeometry) -> int:
    n1, n2, n3 = geom.lengths
    return min(max(n1 + n3, n2), max(n1, n2 + n3))


def minimal_time(geom: StarGeometry) -> int:
    """Shortest horizon the back-substitution construction can hit.

    One step below :func:`optimal_time`: the centre value ``g_{T-N3}`` only
    feeds the clamped site ``v_3`` and need not be produced.
    """
    return optimal_time(geom) - 1


def g_from_target(phi3, geom: StarGeometry, horizon: int) -> np.ndarray:
    """Centre trace ``g_t``, ``t = 0..T``, that lays ``phi3`` onto edge 3 at ``t = T``."""
    phi3 = np.asarray(phi3, dtype=float)
    n3 = geom.n3
    if horizon < n3:
        raise ControlError(f"horizon {horizon} is shorter than edge 3 (N3={n3})")
    if len(phi3) != n3:
        raise ControlError(f"phi3 has {len(phi3)} values, expected {n3}")
    g = np.zeros((horizon + 1,) + phi3.shape[1:])
    # g[T - j] = phi3[N3 - j] for j < N3; g[T - N3] = phi3_0 = 0 (clamped v_3)
    g[horizon - n3 + 1 :] = phi3
    return g


def _driver(geom: StarGeometry, horizon: int) -> int:
    n1, n2, n3 = geom.lengths
    if horizon >= max(n1 + n3, n2) - 1:
        return 1
    if horizon >= max(n2 + n3, n1) - 1:
        return 2
    raise ControlError(f"horizon {horizon} is below the minimal control time {minimal_time(geom)}")


def solve_controls(
    target: ShapeTarget,
    geom: StarGeometry,
    condition: NodeCondition | float | None = None,
    horizon: int | None = None,
) -> ControlPair:
    """Controls steering the star from rest to ``target`` at ``horizon``.

    ``condition`` supplies the centre mass (matched, ``m = 1/2``, when
    omitted); ``m = -1`` is not supported. ``horizon`` defaults to
    :func:`optimal_time`. When ``L1 <= L2`` edge 1 drives the centre and
    ``f2`` vanishes on ``t <= T - N2``; otherwise the roles swap.
    """
    target.check(geom)
    if condition is None:
        m = 0.5
    elif isinstance(condition, NodeCondition):
        m = condition.mass(4)
    else:
        m = float(condition)
    if m == -1.0:
        raise ControlError("the constrained (m = -1) centre is not supported")
    T = optimal_time(geom) if horizon is None else int(horizon)
    d = _driver(geom, T)
    n = geom.lengths
    nd = n[d - 1]

    g = g_from_target(target.phi3, geom, T)
    batch = g.shape[1:]
    f = {1: np.zeros((T,) + batch), 2: np.zeros((T,) + batch)}

    # centre recurrence at t fixes g[t+1]; its newest control term is f_d[t - N_d + 1]
    for t in range(T):
        prev = g[t - 1] if t >= 1 else 0.0
        rhs = (1 + m) * (g[t + 1] + prev) - (2 * m - 1) * g[t]
        for k in range(3):
            rhs = rhs - interval_right(g, n[k], n[k] - 1, t)
        rhs = rhs - interval_left(f[d], nd, nd - 1, t)
        s = t - nd + 1
        if s >= 0:
            f[d][s] = rhs
        elif np.max(np.abs(rhs)) > _CONSISTENCY_TOL * max(1.0, float(np.max(np.abs(g)))):
            raise ControlError(f"centre equation at t={t} has no free control")

    for i in (1, 2):
        ni = n[i - 1]
        phi = target.edges[i - 1]
        for j in range(1, ni):
            want = phi[j - 1] - interval_right(g, ni, j, T)
            f[i][T - j] = want - interval_left(f[i], ni, j, T)
    return ControlPair(f[1], f[2], T)


def explicit_equal_length_controls(target: ShapeTarget, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form controls for ``N1 = N2 = N3 = n`` (length ``2n``).

    ``f1_j = 3/2 phi3_{j+1}`` and ``f2_j = 0`` for ``j < n``;
    ``f1_j = phi1_k + phi3_k / 2`` and ``f2_j = phi2_k - phi3_k`` with
    ``k = 2n - j - 1`` for ``n <= j < 2n``. ``phi^i_0`` is the final boundary
    value (zero on edge 3), so the last entry is the boundary value at the
    horizon ``2n - 1``, the time these controls reach the target.
    """
    target.check(StarGeometry(n, n, n))

    def ext(phi, phi0):
        # index 0..n
        return np.concatenate([np.broadcast_to(phi0, phi[:1].shape), phi])

    p1 = ext(target.phi1, target.phi1_0)
    p2 = ext(target.phi2, target.phi2_0)
    p3 = ext(target.phi3, 0.0)
    f1 = np.zeros((2 * n,) + p1.shape[1:])
    f2 = np.zeros_like(f1)
    for j in range(n):
        f1[j] = 1.5 * p3[j + 1]
    for j in range(n, 2 * n):
        k = 2 * n - j - 1
        f1[j] = p1[k] + 0.5 * p3[k]
        f2[j] = p2[k] - p3[k]
    return f1, f2


def verify_control(
    pair: ControlPair,
    target: ShapeTarget,
    geom: StarGeometry,
    condition: NodeCondition | None = None,
) -> ResidualReport:
    """Simulate the controls and compare the layer at ``T`` with the target."""
    graph = geom.graph()
    condition = condition or NodeCondition.matched(graph)
    traj = simulate(graph, condition, {1: pair.f1, 2: pair.f2}, pair.horizon)
    report = ResidualReport(0.0)
    for i, phi in enumerate(target.edges, 1):
        got = traj.field[pair.horizon + 1, graph.edge_sites(i)[1:]]
        report.targets[i] = phi
        report.actual[i] = got
        report.max_residual = max(report.max_residual, float(np.max(np.abs(got - phi))))
    return report


def read_target_csv(text: str, geom: StarGeometry) -> ShapeTarget:
    """Parse ``edge,j,value`` rows; ``j = 0`` on edges 1-2 sets the final boundary value."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or [h.strip() for h in reader.fieldnames] != ["edge", "j", "value"]:
        raise ControlError("target CSV must start with header 'edge,j,value'")
    phis = [np.full(n, np.nan) for n in geom.lengths]
    ends = [0.0, 0.0]
    for k, row in enumerate(reader, 2):
        try:
            e, j, val = int(row["edge"]), int(row["j"]), float(row["value"])
        except (TypeError, ValueError):
            raise ControlError(f"target CSV line {k}: bad row") from None
        if e not in (1, 2, 3) or not 0 <= j <= geom.lengths[e - 1]:
            raise ControlError(f"target CSV line {k}: no site ({e}, {j})")
        if j == 0:
            if e == 3 and val != 0.0:
                raise ControlError("edge 3 starts at the clamped vertex; phi3_0 must be 0")
            if e < 3:
                ends[e - 1] = val
            continue
        phis[e - 1][j - 1] = val
    for e, phi in enumerate(phis, 1):
        if np.isnan(phi).any():
            raise ControlError(f"target CSV misses sites on edge {e}")
    return ShapeTarget(*phis, phi1_0=ends[0], phi2_0=ends[1])


def write_target_csv(target: ShapeTarget) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["edge", "j", "value"])
    for e, phi in enumerate(target.edges, 1):
        for j, val in enumerate(phi, 1):
            w.writerow([e, j, repr(float(val))])
    return buf.getvalue()


def write_controls_csv(pair: ControlPair) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "f1", "f2"])
    for t in range(pair.horizon):
        w.writerow([t, repr(float(pair.f1[t])), repr(float(pair.f2[t]))])
    return buf.getvalue()


def read_controls_csv(text: str) -> ControlPair:
    rows = list(csv.DictReader(io.StringIO(text)))
    T = len(rows)
    f1, f2 = np.zeros(T), np.zeros(T)
    for r in rows:
        t = int(r["t"])
        f1[t], f2[t] = float(r["f1"]), float(r["f2"])
    return ControlPair(f1, f2, T)


def write_report_csv(report: ResidualReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["edge", "j", "target", "actual", "residual"])
    for e in sorted(report.targets):
        for j, (want, got) in enumerate(zip(report.targets[e], report.actual[e]), 1):
            w.writerow([e, j, repr(float(want)), repr(float(got)), repr(float(got - want))])
    return buf.getvalue()
