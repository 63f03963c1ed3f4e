"""Star-graph pulse experiments: the three node-condition tables and
transmission/reflection coefficients."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dynamics import DIRECT, MATCHED, UNIT_MASS, NodeCondition, simulate
from .graph import star_graph

TABLE_CONDITIONS = (DIRECT, UNIT_MASS, MATCHED)
TABLE_N = 3
TABLE_HORIZON = 6


@dataclass
class PulseTable:
    condition: str
    times: list[int]
    # columns: edge 1 j=0..N, then edges 2/3 j=N-1..0 (centre shown once)
    rows: np.ndarray

    @property
    def columns(self) -> list[str]:
        n = TABLE_N
        return [f"e1:{j}" for j in range(n)] + ["centre"] + [f"e2,3:{j}" for j in range(n - 1, -1, -1)]


def pulse_table(condition: str, n: int = TABLE_N, horizon: int = TABLE_HORIZON) -> PulseTable:
    """Unit pulse at ``v_1`` of the equal-length 3-star, rows for ``t = horizon..-1``."""
    graph = star_graph([n, n, n])
    traj = simulate(graph, NodeCondition.parse(condition, graph), {1: [1.0]}, horizon)
    e1 = traj.edge_array(1)
    e2 = traj.edge_array(2)
    times = list(range(horizon, -2, -1))
    rows = np.array([np.concatenate([e1[:, t + 1], e2[n - 1 :: -1, t + 1]]) for t in times])
    return PulseTable(condition, times, rows)


def run_tables() -> list[PulseTable]:
    return [pulse_table(c) for c in TABLE_CONDITIONS]


def format_value(x: float) -> str:
    """Rational form ``p/q`` (q <= 6) when within 1e-12, else 12 significant digits."""
    x = float(x)
    frac = Fraction(x).limit_denominator(6)
    if abs(x - float(frac)) <= 1e-12:
        if frac.denominator == 1:
            return str(frac.numerator)
        return f"{frac.numerator}/{frac.denominator}"
    return f"{x:.12g}"


def format_table(table: PulseTable) -> str:
    header = ["t"] + table.columns
    body = [[str(t)] + [format_value(v) for v in row] for t, row in zip(table.times, table.rows)]
    widths = [max(len(r[k]) for r in [header] + body) for k in range(len(header))]
    lines = [f"condition: {table.condition}"]
    for r in [header] + body:
        lines.append("  ".join(cell.rjust(w) for cell, w in zip(r, widths)))
    return "\n".join(lines)


@dataclass
class TransmissionReport:
    k: int
    condition: str
    transmitted: float | None
    reflected: float | None
    spread: int
    transmitted_layers: list[float]
    reflected_layers: list[float]


def measure_transmission(k: int, n: int, condition: str = MATCHED) -> TransmissionReport:
    """Send a unit pulse from ``v_1`` into the centre of the equal-length star ``S_k``.

    Both pulses are read at the site next to the centre (``j = N-1``) on
    edge 1 (reflected) and edge 2 (transmitted) for ``t = N..3N-3``, i.e.
    after the incident pulse has passed and before echoes from the outer
    vertices return. Coefficients are the sums over the pulse layers;
    ``spread`` counts layers from the first to the last nonzero value of
    either pulse.
    A pulse still alive at the end of the window (resonance) is reported
    with ``spread`` equal to the horizon and no coefficients.
    """
    if k < 2:
        raise ValueError("star order must be at least 2")
    if n < 3:
        raise ValueError(f"N={n} too small: incident and reflected pulses overlap")
    horizon = 3 * n - 3
    graph = star_graph([n] * k)
    traj = simulate(graph, NodeCondition.parse(condition, graph), {1: [1.0]}, horizon)
    window = slice(n + 1, horizon + 2)
    refl = traj.edge_array(1)[n - 1, window]
    trans = traj.edge_array(2)[n - 1, window]
    trans_l, refl_l = [float(x) for x in trans], [float(x) for x in refl]
    alive = np.flatnonzero((np.abs(refl) > 1e-12) | (np.abs(trans) > 1e-12))
    if len(alive) == 0 or alive[-1] == len(refl) - 1:
        return TransmissionReport(k, condition, None, None, horizon, trans_l, refl_l)
    spread = int(alive[-1] - alive[0] + 1)
    return TransmissionReport(
        k, condition, float(trans.sum()), float(refl.sum()), spread, trans_l, refl_l
    )
