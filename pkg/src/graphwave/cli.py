"""Command-line entry point: ``graphwave {simulate,tables,transmit,control}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import control as ctl
from .closed_form import StarGeometry
from .dynamics import (
    MATCHED,
    NodeCondition,
    read_control_csv,
    simulate,
    write_trajectory_csv,
)
from .experiments import format_table, format_value, measure_transmission, run_tables
from .graph import build_graph, parse_graph_spec


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_controls(items, graph):
    controls = {}
    for item in items or []:
        if "=" in item:
            v, path = item.split("=", 1)
            try:
                vertex = int(v)
            except ValueError:
                raise ValueError(f"bad control vertex in {item!r}") from None
        elif len(graph.controlled) == 1:
            vertex, path = graph.controlled[0], item
        else:
            raise ValueError(f"control {item!r} needs a VERTEX=PATH prefix")
        if vertex in controls:
            raise ValueError(f"vertex {vertex} given two control files")
        controls[vertex] = read_control_csv(Path(path).read_text())
    return controls


def cmd_simulate(args):
    graph = build_graph(parse_graph_spec(Path(args.graph).read_text()))
    condition = NodeCondition.parse(args.condition, graph)
    traj = simulate(graph, condition, _parse_controls(args.controls, graph), args.horizon)
    _emit(write_trajectory_csv(traj), args.out)


def cmd_tables(args):
    print("\n\n".join(format_table(t) for t in run_tables()))


def cmd_transmit(args):
    r = measure_transmission(args.k, args.n, args.condition)
    fmt = lambda x: "unset" if x is None else format_value(x)  # noqa: E731
    print(f"k={r.k} condition={r.condition}")
    print(f"transmitted={fmt(r.transmitted)} reflected={fmt(r.reflected)} spread={r.spread}")
    print("transmitted layers: " + " ".join(format_value(x) for x in r.transmitted_layers))
    print("reflected layers:   " + " ".join(format_value(x) for x in r.reflected_layers))


def cmd_control(args):
    geom = StarGeometry.parse(args.geom)
    target = ctl.read_target_csv(Path(args.target).read_text(), geom)
    condition = NodeCondition.parse(args.condition, geom.graph())
    pair = ctl.solve_controls(target, geom, condition, horizon=args.time)
    _emit(ctl.write_controls_csv(pair), args.out)
    if args.verify:
        report = ctl.verify_control(pair, target, geom, condition)
        if args.report:
            Path(args.report).write_text(ctl.write_report_csv(report))
        print(f"T={pair.horizon} max_residual={report.max_residual:.3e}", file=sys.stderr)
        if not report.ok(args.tol):
            raise ValueError(f"verification residual {report.max_residual:.3e} exceeds tol {args.tol:g}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphwave", description="Discrete wave equation on graphs.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="time-step a graph and write the trajectory CSV")
    s.add_argument("--graph", required=True, help="graph spec file")
    s.add_argument("--condition", default=MATCHED, help="direct | unit-mass | matched | mass=<real>")
    s.add_argument("--controls", nargs="*", metavar="[VERTEX=]CSV", help="t,value control files")
    s.add_argument("--horizon", type=int, required=True)
    s.add_argument("--out", help="output CSV (default stdout)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("tables", help="print the three 3-star pulse tables")
    s.set_defaults(func=cmd_tables)

    s = sub.add_parser("transmit", help="measure transmission/reflection at a star centre")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--condition", default=MATCHED)
    s.set_defaults(func=cmd_transmit)

    s = sub.add_parser("control", help="solve the 3-star shape control problem")
    s.add_argument("--geom", required=True, help="N1,N2,N3")
    s.add_argument("--target", required=True, help="edge,j,value target CSV")
    s.add_argument("--time", type=int, help="horizon (default: optimal time)")
    s.add_argument("--condition", default=MATCHED)
    s.add_argument("--out", help="t,f1,f2 controls CSV (default stdout)")
    s.add_argument("--verify", action="store_true", help="simulate and check the final shape")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--report", help="residual report CSV (with --verify)")
    s.set_defaults(func=cmd_control)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
