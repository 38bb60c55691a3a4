"""Command-line entry point: ``ideonash COMMAND SCENARIO [options]``.

Exit status is 0 on certified success, 2 when a solve finishes but a
diagnostic fails (non-unique equilibrium, broken path, failed containment or
deviation check) and 1 on any other error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import report
from .errors import DiagnosticsFailure, IdeoNashError
from .scenario import COMMANDS, ScenarioFile, load_scenario, type_model

log = logging.getLogger("ideonash")


class Failed(DiagnosticsFailure):
    """A command ran to completion but its certification did not pass."""


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ideonash", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS) + ["run"],
                   help="experiment to run; 'run' uses the scenario's experiment.command")
    p.add_argument("scenario", help="scenario file (.scn)")
    p.add_argument("--out", default="out", help="directory for CSV output (default ./out)")
    p.add_argument("--param", help="parameter path for sweep, e.g. k_right or cost.slope")
    p.add_argument("--from", dest="start", type=float)
    p.add_argument("--to", dest="stop", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--side", choices=("left", "right"))
    p.add_argument("--seed", type=int, help="seed for generated BNE candidates")
    p.add_argument("--region", choices=("box", "bisector"))
    p.add_argument("--quiet", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


class _Run:
    def __init__(self, sf: ScenarioFile, args: argparse.Namespace):
        self.sf = sf
        self.args = args
        self.exp = sf.experiment
        self.stem = Path(sf.source).stem if sf.source else "scenario"
        self.out = Path(args.out)

    def say(self, text: str = "") -> None:
        if not self.args.quiet:
            print(text)

    def opt(self, flag: str, key: str, default=None):
        value = getattr(self.args, flag)
        if value is None:
            value = self.exp.get(key, default)
        if value is None:
            raise IdeoNashError(f"missing --{flag} (or experiment.{key} in the scenario)")
        return value

    def grid(self) -> np.ndarray:
        return np.linspace(self.opt("start", "from"), self.opt("stop", "to"),
                           int(self.opt("steps", "steps")))

    def write(self, name: str, obj) -> None:
        path = report.emit_csv(obj, self.out / f"{self.stem}-{name}.csv")
        self.say(f"wrote {path}")

    # ---------------------------------------------------------------- 1-D

    def solve(self) -> None:
        from .solver1d import solve_nash
        r = solve_nash(self.sf.model)
        self.say(f"x_left* = {r.x_left:.12g}")
        self.say(f"x_right* = {r.x_right:.12g}")
        self.say(f"foc residuals = {r.foc_residual[0]:.3g}, {r.foc_residual[1]:.3g}")
        self.say(f"det(H) = {r.det:.12g}")
        self.say(f"boundary flags = {r.boundary_flags[0]}, {r.boundary_flags[1]}")
        self.say(f"uniqueness certified = {r.diagnostics.certified}")
        self.write("solve", r)
        if not r.diagnostics.certified:
            raise Failed("own-utility slices are not unimodal")

    def sweep(self) -> None:
        from .sensitivity import bisect_sign, perturb_deviation, set_param, sweep
        from .solver1d import solve_nash
        param = self.opt("param", "param")
        eps = self.opt("epsilon", "epsilon", 1e-3)
        side = self.opt("side", "side", "right")
        s = self.sf.model
        path = sweep(s, param, self.grid())
        self.write("sweep", path)

        def shift(value, r=None):
            sv = set_param(s, param, value)
            r = r or solve_nash(sv, check_unique=False, certify_result=False)
            if not r.interior:
                return math.nan
            return float(perturb_deviation(sv, r, eps, side, oracle=False).predicted[0])

        shifts = [shift(v, r) for v, r in zip(path.grid, path.results)]
        header = ["parameter", "x_left", "x_right", "shift_left"]
        rows = [[v, *r.pair, d] for v, r, d in zip(path.grid, path.results, shifts)]
        dest = report.write_table(header, rows, self.out / f"{self.stem}-sweep-shifts.csv")
        self.say(f"{len(path.grid)} equilibria along {param}; wrote {dest}")
        for i in range(len(shifts) - 1):
            a, b = shifts[i], shifts[i + 1]
            if np.isfinite(a) and np.isfinite(b) and np.sign(a) != np.sign(b):
                at = bisect_sign(shift, path.grid[i], path.grid[i + 1], 1e-4)
                self.say(f"predicted x_left shift under a {side} cost perturbation changes sign "
                         f"at {param} = {at:.4f}")
                break

    def _base(self):
        from .solver1d import solve_nash
        return solve_nash(self.sf.model)

    def _print_report(self, rep) -> None:
        self.say(f"equilibrium = ({rep.base[0]:.12g}, {rep.base[1]:.12g})")
        self.say(f"predicted shift = ({rep.predicted[0]:.6g}, {rep.predicted[1]:.6g})")
        if rep.oracle is not None:
            self.say(f"re-solved shift = ({rep.oracle[0]:.6g}, {rep.oracle[1]:.6g}); "
                     f"first-order error {rep.first_order_error:.3g}")
        self.say(f"elasticities = ({rep.elasticities[0]:.6g}, {rep.elasticities[1]:.6g})")

    def elasticity(self) -> None:
        from .sensitivity import perturb_deviation
        eps = self.opt("epsilon", "epsilon", 1e-3)
        side = self.opt("side", "side", "right")
        rep = perturb_deviation(self.sf.model, self._base(), eps, side)
        self.say(f"deviation cost of the {side} party scaled by 1 + {eps:g}")
        self._print_report(rep)
        self.write("elasticity", rep)

    def distperturb(self) -> None:
        from .sensitivity import perturb_distribution
        gamma = self.opt("gamma", "gamma", 0.05)
        toward = self.sf.function(self.exp.get("toward", ""))
        away = self.sf.function(self.exp.get("away", ""))
        rep = perturb_distribution(self.sf.model, self._base(), gamma, toward, away)
        self.say(f"density moved by {gamma:g} * ({self.exp['toward']} - {self.exp['away']})")
        self._print_report(rep)
        self.write("distperturb", rep)

    def mixpath(self) -> None:
        from .sensitivity import mixture_containment
        a = self.sf.function(self.exp.get("mix_from", ""))
        b = self.sf.function(self.exp.get("mix_to", ""))
        lambdas = self.exp.get("lambdas") or list(np.linspace(0.0, 1.0, 11))
        rep = mixture_containment(self.sf.model, a, b, lambdas)
        for lam, p in zip(rep.lambdas, rep.pairs):
            self.say(f"lambda = {lam:.3f}: ({p.x_left:.10f}, {p.x_right:.10f})")
        self.say(f"contained = {rep.holds}; monotone = {rep.monotone_left and rep.monotone_right}")
        self.write("mixpath", rep)
        if not rep.holds:
            raise Failed("a mixture equilibrium left the endpoint interval")

    # ---------------------------------------------------------------- N-D

    def _nd(self):
        s = self.sf.model
        return replace(s, region=self.args.region) if self.args.region else s

    def solve_nd(self) -> None:
        from .multidim import solve_nash_nd
        r = solve_nash_nd(self._nd())
        self.say(f"x_left* = {np.array2string(r.x_left, precision=10)}")
        self.say(f"x_right* = {np.array2string(r.x_right, precision=10)}")
        self.say(f"gradient residual = {r.residual_norm:.3g}")
        self.say(f"slice scan certified = {r.slices.certified}")
        self.write("solve-nd", r)
        if not r.slices.certified:
            raise Failed("a coordinate slice has several maxima")

    def phi_sweep(self) -> None:
        from .multidim import perturb_feasibility, sweep_phi_scale
        s = self._nd()
        path = sweep_phi_scale(s, self.grid())
        self.write("phi-sweep", path)
        first, last = path.results[0], path.results[-1]
        for side in ("left", "right"):
            delta = getattr(last, f"x_{side}") - getattr(first, f"x_{side}")
            self.say(f"{side} moves by {np.array2string(delta, precision=6)} "
                     f"from scale {path.grid[0]:g} to {path.grid[-1]:g}")
        alpha = self.exp.get("alpha", 0.1)
        rep = perturb_feasibility(s, first, alpha)
        self.say(f"linear response at scale {path.grid[0]:g} to alpha = {alpha:g}: "
                 f"{np.array2string(rep.full, precision=6)}")
        self.write("phi-response", rep)

    # ---------------------------------------------------------------- BNE

    def bne(self) -> None:
        from .bne import solve_bne
        scenario, tm = self.sf.model
        if self.args.seed is not None and "candidates" not in self.sf.types:
            tm = type_model(self.sf, self.args.seed)
        pol = solve_bne(tm, scenario)
        for j in range(pol.left.size):
            self.say(f"signal {j}: x_left = {pol.left[j]:.10f}, x_right = {pol.right[j]:.10f}")
        self.say(f"largest profitable deviation = {pol.max_deviation_gain:.3g}")
        self.write("bne", pol)
        if pol.max_deviation_gain > 1e-6:
            raise Failed("a unilateral deviation improves expected utility")


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        sf = load_scenario(args.scenario)
        command = sf.experiment.get("command") if args.command == "run" else args.command
        if command not in COMMANDS:
            raise IdeoNashError(f"scenario has no runnable experiment.command ({command!r})")
        if COMMANDS[command] != sf.kind:
            raise IdeoNashError(f"command {command!r} needs a {COMMANDS[command]} model, "
                                f"the scenario is {sf.kind}")
        getattr(_Run(sf, args), command.replace("-", "_"))()
    except DiagnosticsFailure as exc:
        print(f"diagnostics failed: {exc}", file=sys.stderr)
        return 2
    except (IdeoNashError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
