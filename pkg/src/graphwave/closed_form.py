"""Characteristic (d'Alembert-type) solutions on the interval and the 3-star.

Signals are zero-extended: ``f[k]`` is taken as 0 for ``k < 0`` or
``k >= len(f)``. Every function accepts signals with trailing batch axes
and then returns arrays with those axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory
from .graph import star_graph


class WindowExceeded(ValueError):
    """The centre-trace formula is only claimed inside its validity window."""


@dataclass(frozen=True)
class StarGeometry:
    n1: int
    n2: int
    n3: int

    def __post_init__(self):
        if min(self.lengths) < 2:
            raise ValueError(f"edge lengths must be >= 2, got {self.lengths}")

    @property
    def lengths(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    @classmethod
    def parse(cls, text: str) -> "StarGeometry":
        parts = [int(p) for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected N1,N2,N3, got {text!r}")
        return cls(*parts)

    def graph(self):
        """Star with ``v_1``, ``v_2`` controlled and ``v_3`` clamped."""
        return star_graph(self.lengths, controlled=(1, 2))

    @property
    def window(self) -> int:
        """Exclusive upper bound on t for the centre-trace formula.

        The first echo (off ``v_1``, ``v_2`` or the clamped ``v_3``) of a
        pulse entering the centre at ``min(N1, N2)`` comes back ``2 min(N)``
        later.
        """
        n = self.lengths
        return min(self.n1, self.n2) + 2 * min(n)

    @property
    def printed_window(self) -> int:
        """``N1 + N2 + N3 + min(N) - max(N)``; larger than :attr:`window` for some geometries."""
        n = self.lengths
        return sum(n) + min(n) - max(n)


def _at(f: np.ndarray, k: int):
    if 0 <= k < len(f):
        return f[k]
    return np.zeros_like(f[0]) if len(f) else 0.0


def _check_site(n, j):
    if not 0 <= j <= n:
        raise IndexError(f"site {j} outside 0..{n}")


def interval_left(f, n: int, j: int, t: int):
    """Solution at ``(j, t)`` driven by ``f`` at site 0 with site ``n`` clamped."""
    _check_site(n, j)
    f = np.asarray(f, dtype=float)
    if t < 0:
        return np.zeros_like(_at(f, 0))
    out = 0.0
    for k in range((t - j) // (2 * n) + 1):
        out = out + _at(f, t - j - 2 * k * n)
    for k in range(1, (t + j) // (2 * n) + 1):
        out = out - _at(f, t + j - 2 * k * n)
    return out + np.zeros_like(_at(f, 0))


def interval_right(g, n: int, j: int, t: int):
    """Solution at ``(j, t)`` driven by ``g`` at site ``n`` with site 0 clamped."""
    _check_site(n, j)
    g = np.asarray(g, dtype=float)
    if t < 0:
        return np.zeros_like(_at(g, 0))
    out = 0.0
    for k in range((t + j - n) // (2 * n) + 1):
        out = out + _at(g, t + j - (2 * k + 1) * n)
    for k in range((t - j - n) // (2 * n) + 1):
        out = out - _at(g, t - j - (2 * k + 1) * n)
    return out + np.zeros_like(_at(g, 0))


def interval_field(f, n: int, horizon: int, side: str = "left") -> np.ndarray:
    """Whole solution, shape ``(T + 2, n + 1, *batch)`` indexed ``[t + 1, j]``."""
    fn = interval_left if side == "left" else interval_right
    f = np.asarray(f, dtype=float)
    out = np.zeros((horizon + 2, n + 1) + f.shape[1:])
    for t in range(horizon + 1):
        for j in range(n + 1):
            out[t + 1, j] = fn(f, n, j, t)
    return out


def star_center_trace(f1, f2, geom: StarGeometry, horizon: int) -> np.ndarray:
    """Centre values ``g_t = 2/3 (f1[t - N1] + f2[t - N2])`` for ``t = 0..T``."""
    if horizon >= geom.window:
        raise WindowExceeded(
            f"horizon {horizon} outside the centre-trace window t < {geom.window} for {geom.lengths}"
        )
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    return np.stack(
        [2.0 / 3.0 * (_at(f1, t - geom.n1) + _at(f2, t - geom.n2)) for t in range(horizon + 1)]
    )


def star_center_exact(f1, f2, geom: StarGeometry, horizon: int, mass: float = 0.5) -> np.ndarray:
    """Centre values for ``t = 0..T`` from the nodal recurrence, with no window.

    Each edge value next to the centre is written as the interval solution
    driven by its outer control plus the one driven by the centre trace
    itself, which only needs centre values strictly before ``t``.
    """
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    drives = ((f1, geom.n1), (f2, geom.n2), (None, geom.n3))
    batch = np.broadcast_shapes(f1.shape[1:], f2.shape[1:])
    g = np.zeros((horizon + 1,) + batch)
    for t in range(horizon):
        nb = 0.0
        for f, n in drives:
            if f is not None:
                nb = nb + interval_left(f, n, n - 1, t)
            nb = nb + interval_right(g, n, n - 1, t)
        prev = g[t - 1] if t >= 1 else 0.0
        g[t + 1] = ((2 * mass - 1) * g[t] + nb) / (1 + mass) - prev
    return g


def star_forward(f1, f2, geom: StarGeometry, horizon: int, exact: bool = False) -> Trajectory:
    """Forward solution on the 3-star (matched centre) by superposing interval solutions.

    With ``exact=True`` the centre trace comes from :func:`star_center_exact`
    and the result holds for every horizon.
    """
    if exact:
        g = star_center_exact(f1, f2, geom, horizon)
    else:
        g = star_center_trace(f1, f2, geom, horizon)
    graph = geom.graph()
    pieces = {
        1: interval_field(f1, geom.n1, horizon) + interval_field(g, geom.n1, horizon, "right"),
        2: interval_field(f2, geom.n2, horizon) + interval_field(g, geom.n2, horizon, "right"),
        3: interval_field(g, geom.n3, horizon, "right"),
    }
    field = np.zeros((horizon + 2, graph.n_sites) + g.shape[1:])
    for e, arr in pieces.items():
        field[:, graph.edge_sites(e)] = arr
    return Trajectory(graph, field)
