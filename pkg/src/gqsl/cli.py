"""``qsl`` command line: evolve, bound, verify, mixed.

Exit codes: 0 success, 1 verification failure, 2 input/schema error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import GeneratorSpec, evolve, speed_analytic_profile
from .geometry import BoundReport, Trajectory, qsl_report, speed_profile
from .io import SpecError, ModelSpec, SweepSpec, load_density_trajectory, write_csv
from .mixed import mixed_qsl
from .models import bethe_lamb as bl
from .models import gain_loss as gl
from .numerics import NumericalError, cumulative_integral

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
RATIO_SLACK = 1e-6
BOUND_HEADER = ("T", "S0", "S", "V_bar", "T_qsl", "ratio")


def default_steps(t_max: float, rate: float) -> int:
    return max(2000, 40 * int(math.ceil(t_max * rate)))


@dataclass
class Model:
    """A spec resolved into callables the runners can use."""

    spec: ModelSpec
    rate: float
    trajectory: Callable[[float, int], Trajectory]
    analytic: Callable[[Trajectory], np.ndarray] | None
    bound: Callable[[float, int], BoundReport]

    def steps_for(self, t_max: float, override: int | None = None) -> int:
        if override is not None:
            return override
        grid = self.spec.grid
        if "steps" in grid and math.isclose(grid.get("t_max", -1.0), t_max):
            return int(grid["steps"])
        return default_steps(t_max, self.rate)


def _closed_form_params(spec: ModelSpec):
    h, p = spec.hbar, spec.params
    if spec.model == "gain_loss":
        return gl.GainLossParams(p["g"] / h, p["gamma_L"] / h, p["gamma_G"] / h)
    if spec.model == "pt_symmetric":
        return gl.GainLossParams.pt_symmetric(p["g"] / h, p["gamma"] / h)
    # Delta is a frequency in the phase factor and is not rescaled.
    return bl.BetheLambParams(p["gamma_1"] / h, p["gamma_2"] / h, p["Delta"], p["Omega"] / h)


def _generic(spec: ModelSpec, gen: GeneratorSpec, psi0: np.ndarray, rate: float) -> Model:
    def trajectory(T: float, steps: int) -> Trajectory:
        return evolve(gen, psi0, T, steps)

    def bound(T: float, steps: int) -> BoundReport:
        return qsl_report(trajectory(T, steps))

    return Model(spec, rate, trajectory, lambda tr: speed_analytic_profile(gen, tr), bound)


def build_model(spec: ModelSpec) -> Model:
    if spec.model in ("gain_loss", "pt_symmetric"):
        p = _closed_form_params(spec)
        if not spec.uses_default_state:
            return _generic(spec, p.generator(), spec.initial_state, p.characteristic_rate())

        def trajectory(T: float, steps: int) -> Trajectory:
            times = np.linspace(0.0, T, steps + 1)
            return Trajectory(np.array([gl.gl_propagator(p, t) @ gl.PSI0 for t in times]), T / steps)

        return Model(
            spec,
            p.characteristic_rate(),
            trajectory,
            lambda tr: np.array([gl.gl_speed(p, t) for t in tr.times]),
            lambda T, steps: gl.gl_bound(p, T, steps),
        )
    if spec.model == "bethe_lamb":
        p = _closed_form_params(spec)
        if not spec.uses_default_state:
            return _generic(spec, p.generator(), spec.initial_state, p.characteristic_rate())

        def trajectory(T: float, steps: int) -> Trajectory:
            times = np.linspace(0.0, T, steps + 1)
            return Trajectory(np.array([bl.bl_propagator(p, t) @ bl.PSI0 for t in times]), T / steps)

        return Model(
            spec,
            p.characteristic_rate(),
            trajectory,
            lambda tr: np.array([bl.bl_speed(p, t) for t in tr.times]),
            lambda T, steps: bl.bl_bound(p, T, steps),
        )
    if spec.model in ("hermitian_matrix", "matrix"):
        H = spec.matrix()
        gen = GeneratorSpec.constant(H, spec.hbar, hermitian=spec.model == "hermitian_matrix")
        psi0 = spec.initial_state
        if psi0 is None:
            psi0 = np.ones(gen.dim, dtype=complex) / math.sqrt(gen.dim)
        return _generic(spec, gen, psi0, float(np.linalg.norm(H, 2)) / spec.hbar)

    # tabulated
    full = Trajectory(spec.tabulated_samples(), float(spec.params["dt"]), spec.hbar)

    def prefix(T: float, steps: int) -> Trajectory:
        k = round(T / full.dt)
        if not (2 <= k < len(full)) or not math.isclose(k * full.dt, T, rel_tol=1e-9):
            raise SpecError(
                f"T={T} is not a sample time of the tabulated trajectory "
                f"(dt={full.dt}, duration={full.duration})"
            )
        return full.head(k + 1)

    return Model(spec, 0.0, prefix, None, lambda T, steps: qsl_report(prefix(T, steps)))


def run_evolve(spec: ModelSpec, out, steps: int | None = None) -> None:
    """Write ``t,re_0,im_0,...,norm,V_numeric[,V_analytic],S_cum``."""
    model = build_model(spec)
    if spec.model == "tabulated":
        traj = model.trajectory(float(spec.params["dt"]) * (len(spec.params["samples"]) - 1), 0)
    else:
        grid = spec.grid
        t_max = grid["t_max"] if "t_max" in grid else max(grid.get("t_list", [0.0]))
        if not t_max > 0:
            raise SpecError("spec: evolve needs grid/t_max (or grid/t_list)")
        traj = model.trajectory(t_max, model.steps_for(t_max, steps))
    V = speed_profile(traj)
    S_cum = cumulative_integral(V, traj.dt)
    header = ["t"]
    for i in range(traj.dim):
        header += [f"re_{i}", f"im_{i}"]
    header += ["norm", "V_numeric"]
    columns = [traj.times[:, None]]
    interleaved = np.empty((len(traj), 2 * traj.dim))
    interleaved[:, 0::2] = traj.samples.real
    interleaved[:, 1::2] = traj.samples.imag
    columns += [interleaved, np.linalg.norm(traj.samples, axis=1)[:, None], V[:, None]]
    if model.analytic is not None:
        header.append("V_analytic")
        columns.append(model.analytic(traj)[:, None])
    header.append("S_cum")
    columns.append(S_cum[:, None])
    write_csv(out, header, np.hstack(columns))


def check_row(r: BoundReport, tolerance: float = 1e-4) -> None:
    if r.S < r.S0 - tolerance:
        raise NumericalError(f"T={r.T:.17g}: S={r.S} < S0={r.S0} beyond {tolerance}")
    if not (0.0 <= r.ratio <= 1.0 + RATIO_SLACK):
        raise NumericalError(f"T={r.T:.17g}: ratio {r.ratio} outside [0, 1 + {RATIO_SLACK}]")


def bound_rows(spec: ModelSpec, sweep: SweepSpec, steps: int | None = None) -> list[BoundReport]:
    model = build_model(spec)
    rows = []
    for T in sweep.values:
        r = model.bound(T, model.steps_for(T, steps))
        check_row(r)
        rows.append(r)
    return rows


def run_bound(spec: ModelSpec, sweep: SweepSpec, out, steps: int | None = None) -> None:
    write_csv(out, BOUND_HEADER, (r.as_row() for r in bound_rows(spec, sweep, steps)))


def resolve_sweep(spec: ModelSpec, text: str | None) -> SweepSpec:
    if text is not None:
        return SweepSpec.parse(text)
    if "t_list" in spec.grid:
        return SweepSpec("T", tuple(float(t) for t in spec.grid["t_list"]))
    if "t_max" in spec.grid:
        return SweepSpec("T", (float(spec.grid["t_max"]),))
    raise SpecError("bound needs --sweep, or grid/t_list or grid/t_max in the spec")


def run_mixed(path, out=None) -> BoundReport:
    report = mixed_qsl(load_density_trajectory(path))
    check_row(report)
    text = json.dumps(report.to_dict(), indent=2)
    if out is None:
        print(text)
    else:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    return report


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsl", description="Quantum speed limits for arbitrary evolutions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="propagate a model and tabulate state, speed and arc length")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int)

    p = sub.add_parser("bound", help="speed-limit bound for a sweep of total times T")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sweep", help="min:max:count[:log]")
    p.add_argument("--steps", type=int)

    p = sub.add_parser("verify", help="run oracle cross-checks and the formula audit")
    p.add_argument("--suite", choices=["mt", "gain_loss", "bethe_lamb", "mixed", "all"], default="all")
    p.add_argument("--out")
    p.add_argument("--tolerance", type=float, help="override every check's tolerance")

    p = sub.add_parser("mixed", help="speed-limit bound for a density-matrix trajectory")
    p.add_argument("--spec", required=True, help="density trajectory JSON")
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if getattr(args, "steps", None) is not None and args.steps < 2:
            raise SpecError("--steps must be >= 2")
        if args.command == "evolve":
            run_evolve(ModelSpec.load(args.spec), args.out, args.steps)
        elif args.command == "bound":
            spec = ModelSpec.load(args.spec)
            run_bound(spec, resolve_sweep(spec, args.sweep), args.out, args.steps)
        elif args.command == "mixed":
            run_mixed(args.spec, args.out)
        else:
            from .verify import run_verify

            report = run_verify(args.suite, args.tolerance)
            text = json.dumps(report, indent=2)
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(text + "\n")
            else:
                print(text)
            return EXIT_OK if report["passed"] else EXIT_VERIFY
    except NumericalError as exc:
        print(f"qsl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SpecError, ValueError) as exc:
        print(f"qsl: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
