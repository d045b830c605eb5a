"""Command-line front end.

Exit codes: 0 the verdict holds, 1 it fails, 2 inconclusive (grid
resolution or solver limits), 3 usage or model error.  Every report
echoes the effective tolerances and grid resolution; --json writes the
full machine-readable report.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time

import numpy as np

from . import certificates, evp, game as game_mod, grid as grid_mod, io as io_mod
from .certificates import CertificateError, PremiseError
from .evp import DescentError
from .expr import ExprError
from .game import Game, GameError
from .grid import GridError, GridSpec
from .io import SchemaError
from .problem import (MIOProblem, Tolerances, as_epsilon, feasible,
                      is_weak_eps_minimal, is_weak_eps_quasi_minimal,
                      is_weak_minimal)

_EXIT = {"holds": 0, "fails": 1, "inconclusive": 2,
         "not-found-at-resolution": 2, "hypothesis-failed": 1}


class UsageError(ValueError):
    pass


def _to_jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(x) for x in obj]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _to_jsonable(dataclasses.asdict(obj))
    return obj


def _parse_point(text: str, dim: int, what: str = "point") -> np.ndarray:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"--{what}: expected comma-separated numbers, got {text!r}")
    if len(vals) != dim:
        raise UsageError(f"--{what}: expected {dim} coordinates, got {len(vals)}")
    return np.array(vals)


def _parse_eps(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise UsageError(f"--eps: expected comma-separated numbers, got {text!r}")


def _load_problem(args) -> tuple[MIOProblem, GridSpec]:
    model = io_mod.load(args.problem)
    if isinstance(model, Game):
        raise UsageError(f"{args.problem} is a game file; this command needs a problem")
    tol = model.tolerances
    overrides = {}
    for flag, name in (("tau_feas", "tau_feas"), ("tau_act", "tau_act"),
                       ("tau_solver", "tau_solver"), ("mu_max", "mu_max")):
        val = getattr(args, flag, None)
        if val is not None:
            overrides[name] = val
    if overrides:
        tol = dataclasses.replace(tol, **overrides)
        model = dataclasses.replace(model, tolerances=tol)
    ppd = args.grid or model.metadata.get("points_per_dim") \
        or grid_mod.default_points_per_dim(model.dim)
    return model, GridSpec(ppd)


def _load_game(args) -> Game:
    model = io_mod.load(args.game)
    if not isinstance(model, Game):
        raise UsageError(f"{args.game} is a problem file; this command needs a game")
    return model


def _config(problem: MIOProblem, spec: GridSpec) -> dict:
    return {"tolerances": dataclasses.asdict(problem.tolerances),
            "points_per_dim": spec.points_per_dim}


def _report_line(report: certificates.CertificateReport) -> dict:
    return {"verdict": report.verdict, "residual": report.residual,
            "threshold": report.threshold, "lambda": report.lam,
            "mu": report.mu, "objective_witnesses": report.obj_witnesses,
            "constraint_witnesses": report.con_witnesses, "exact": report.exact,
            "iterations": report.iterations, "gap": report.gap,
            "mu_capped": report.mu_capped}


# ---------------------------------------------------------------------------
# Command handlers: each returns (verdict, payload)
# ---------------------------------------------------------------------------

def _cmd_verify(args):
    problem, spec = _load_problem(args)
    point = _parse_point(args.point, problem.dim)
    if not feasible(problem, point):
        raise UsageError(f"point {point.tolist()} is infeasible")
    pts = grid_mod.feasible_grid(problem, spec)
    if args.concept == "weak-min":
        ok = is_weak_minimal(problem, point, pts)
    else:
        if args.eps is None:
            raise UsageError(f"--eps is required for concept {args.concept}")
        earr = as_epsilon(_parse_eps(args.eps), problem.n_objectives)
        if args.concept == "weak-eps-min":
            ok = is_weak_eps_minimal(problem, point, earr, pts)
        else:
            ok = is_weak_eps_quasi_minimal(problem, point, earr, pts)
    verdict = "holds" if ok else "fails"
    return verdict, {"concept": args.concept, "point": point,
                     "grid_size": len(pts), "config": _config(problem, spec)}


def _cmd_exist(args):
    problem, spec = _load_problem(args)
    earr = as_epsilon(_parse_eps(args.eps), problem.n_objectives)
    pts = grid_mod.feasible_grid(problem, spec)
    if not pts:
        raise UsageError("feasible grid is empty")
    start = _parse_point(args.start, problem.dim, "start") if args.start else pts[0]
    point, trace = evp.descent_eps_minimal(problem, earr, spec, start)
    return "holds", {"point": point, "start": start,
                     "iterations": len(trace.iterates) - 1,
                     "merits": trace.merits, "config": _config(problem, spec)}


def _cmd_evp(args):
    problem, spec = _load_problem(args)
    pts = grid_mod.feasible_grid(problem, spec)
    if not pts:
        raise UsageError("feasible grid is empty")
    x0 = _parse_point(args.x0, problem.dim, "x0") if args.x0 else pts[0]
    if args.vector:
        earr = _parse_eps(args.eps)
        if earr.size != 1:
            raise UsageError("--vector mode takes a single scalar --eps")
        point, cert = evp.evp_descent_vector(problem, float(earr[0]), spec, x0)
    else:
        earr = as_epsilon(_parse_eps(args.eps), problem.n_objectives)
        point, cert = evp.evp_descent(problem, earr, spec, x0)
    verdict = "holds" if cert.all_hold else "fails"
    return verdict, {"point": point, "x0": x0,
                     "a_holds": cert.a_holds, "b_value": cert.b_value,
                     "b_bound": cert.b_bound, "b_holds": cert.b_holds,
                     "c_holds": cert.c_holds, "config": _config(problem, spec)}


def _cmd_quasi(args):
    problem, spec = _load_problem(args)
    earr = as_epsilon(_parse_eps(args.eps), problem.n_objectives)
    rep = evp.quasi_existence(problem, earr, spec)
    ok = rep.qm_verified and rep.ball_check is not False
    verdict = "holds" if ok else "fails"
    return verdict, {"point": rep.point, "qm_verified": rep.qm_verified,
                     "ball_check": rep.ball_check,
                     "certificate": {"a": rep.evp_certificate.a_holds,
                                     "b_value": rep.evp_certificate.b_value,
                                     "b_bound": rep.evp_certificate.b_bound,
                                     "c": rep.evp_certificate.c_holds},
                     "config": _config(problem, spec)}


def _cmd_thm33(args):
    problem, spec = _load_problem(args)
    point = _parse_point(args.point, problem.dim)
    earr = as_epsilon(_parse_eps(args.eps), problem.n_objectives)
    verdict_obj = grid_mod.check_thm_3_3(problem, point, earr, spec)
    if not verdict_obj.hypothesis_holds:
        return "fails", {"hypothesis_holds": False, "witness": verdict_obj.witness,
                         "config": _config(problem, spec)}
    verdict = "holds" if verdict_obj.conclusion_verified else "fails"
    return verdict, {"hypothesis_holds": True,
                     "conclusion_verified": verdict_obj.conclusion_verified,
                     "config": _config(problem, spec)}


def _cmd_kkt(args):
    problem, spec = _load_problem(args)
    point = _parse_point(args.point, problem.dim)
    cor41 = None
    if args.cor41_eps is not None:
        cor41 = as_epsilon(_parse_eps(args.cor41_eps), problem.n_objectives)
    report = certificates.kkt_check(problem, point, radius=args.radius,
                                    cor41_eps=cor41)
    return report.verdict, {**_report_line(report), "point": point,
                            "config": _config(problem, spec)}


def _cmd_epskkt(args):
    problem, spec = _load_problem(args)
    point = _parse_point(args.point, problem.dim)
    earr = as_epsilon(_parse_eps(args.eps), problem.n_objectives)
    outcome = certificates.eps_kkt_thm_4_1(problem, point, earr, args.delta, spec)
    payload = {"verdict": outcome.verdict, "points_scanned": outcome.points_scanned,
               "config": _config(problem, spec)}
    if outcome.point is not None:
        payload["x_delta"] = outcome.point
        payload["certificate"] = _report_line(outcome.report)
    return outcome.verdict, payload


def _cmd_bcq(args):
    problem, spec = _load_problem(args)
    point = _parse_point(args.point, problem.dim)
    rep = certificates.bcq_check(problem, point)
    verdict = "holds" if rep.holds else "fails"
    return verdict, {"distance": rep.distance, "active_set": list(rep.active),
                     "vacuous": rep.vacuous, "config": _config(problem, spec)}


def _cmd_genconvex(args):
    problem, spec = _load_problem(args)
    point = _parse_point(args.point, problem.dim)
    samples = grid_mod.feasible_grid(problem, spec)
    rep = certificates.gen_convexity_check(problem, point, samples)
    return rep.verdict, {"samples_checked": rep.samples_checked,
                         "infeasible_samples": rep.infeasible_samples,
                         "stalled_samples": rep.stalled_samples,
                         "config": _config(problem, spec)}


def _cmd_sufficiency(args):
    problem, spec = _load_problem(args)
    point = _parse_point(args.point, problem.dim)
    earr = as_epsilon(_parse_eps(args.eps), problem.n_objectives)
    rep = certificates.sufficiency_thm_4_3(problem, point, earr, spec)
    payload = {"verdict": rep.verdict, "qm_confirmed": rep.qm_confirmed,
               "config": _config(problem, spec)}
    if rep.kkt is not None:
        payload["kkt"] = _report_line(rep.kkt)
    return rep.verdict, payload


def _cmd_modkkt(args):
    problem, spec = _load_problem(args)
    point = _parse_point(args.point, problem.dim)
    earr = _parse_eps(args.eps)
    if earr.size != 1:
        raise UsageError("modkkt takes a single scalar --eps")
    outcome = certificates.modified_eps_kkt(problem, point, float(earr[0]), spec)
    payload = {"verdict": outcome.verdict,
               "complementarity_value": outcome.complementarity_value,
               "config": _config(problem, spec)}
    if outcome.point is not None:
        payload["x_eps"] = outcome.point
    if outcome.report is not None:
        payload["certificate"] = _report_line(outcome.report)
    return outcome.verdict, payload


def _cmd_seqkkt(args):
    problem, spec = _load_problem(args)
    point = _parse_point(args.point, problem.dim)
    xs = [_parse_point(chunk, problem.dim, "xs")
          for chunk in args.xs.split(";") if chunk.strip()]
    if not xs:
        raise UsageError("--xs must list at least one point")
    eps_seq = [float(x) for x in args.eps_seq.split(",")]
    inflate = None
    if args.inflate is not None:
        inflate = as_epsilon(_parse_eps(args.inflate), problem.n_objectives)
    rep = certificates.approx_kkt_sequence(problem, point, xs, eps_seq, spec,
                                           inflate=inflate)
    if rep.all_ok:
        verdict = "holds"
    elif any(e.reason == "not-found-at-resolution" for e in rep.entries):
        verdict = "inconclusive"
    else:
        verdict = "fails"
    entries = [{"i": e.i, "eps": e.eps_i, "z_index": e.z_index, "z": e.z,
                "y": e.y, "residual": e.residual, "ok": e.ok, "reason": e.reason}
               for e in rep.entries]
    return verdict, {"entries": entries, "config": _config(problem, spec)}


def _cmd_prop21(args):
    problem, spec = _load_problem(args)
    rep = grid_mod.check_prop_2_1(problem, args.eps0, spec)
    verdict = "holds" if rep.ok else "fails"
    return verdict, {"eps0": rep.eps0, "checked": rep.checked,
                     "violations": rep.violations,
                     "config": _config(problem, spec)}


def _cmd_game_verify(args):
    game = _load_game(args)
    point = _parse_point(args.point, game.profile_dim)
    eps = _parse_eps(args.eps)
    quasi = args.concept == "qne"
    check = game_mod.is_w_eps_qne if quasi else game_mod.is_w_eps_ne
    ok = check(game, point, eps)
    payload = {"concept": args.concept, "point": point}
    if not ok:
        for i in range(game.n_players):
            dev = game_mod.find_deviation(game, i, point, eps, quasi=quasi)
            if dev is not None:
                payload["deviation"] = {"player": i, "strategy": dev}
                break
    return ("holds" if ok else "fails"), payload


def _cmd_game_kkt(args):
    game = _load_game(args)
    point = _parse_point(args.point, game.profile_dim)
    eps = _parse_eps(args.eps)
    outcomes = game_mod.game_kkt(game, point, eps, mode=args.mode, delta=args.delta)
    per_player = []
    verdicts = []
    for out in outcomes:
        if out.report is not None:
            per_player.append({"player": out.player, **_report_line(out.report)})
            verdicts.append(out.report.verdict)
        else:
            entry = {"player": out.player, "verdict": out.search.verdict}
            if out.search.point is not None:
                entry["x_delta"] = out.search.point
                entry["certificate"] = _report_line(out.search.report)
            per_player.append(entry)
            verdicts.append(out.search.verdict)
    if all(v == "holds" for v in verdicts):
        verdict = "holds"
    elif any(v == "fails" for v in verdicts):
        verdict = "fails"
    else:
        verdict = "inconclusive"
    return verdict, {"mode": args.mode, "players": per_player}


def _cmd_game_sufficiency(args):
    game = _load_game(args)
    point = _parse_point(args.point, game.profile_dim)
    eps = _parse_eps(args.eps)
    rep = game_mod.game_sufficiency(game, point, eps)
    return rep.verdict, {"per_player": rep.per_player,
                         "qne_confirmed": rep.qne_confirmed}


_HANDLERS = {
    "verify": _cmd_verify, "exist": _cmd_exist, "evp": _cmd_evp,
    "quasi": _cmd_quasi, "thm33": _cmd_thm33, "kkt": _cmd_kkt,
    "epskkt": _cmd_epskkt, "bcq": _cmd_bcq, "genconvex": _cmd_genconvex,
    "sufficiency": _cmd_sufficiency, "modkkt": _cmd_modkkt,
    "seqkkt": _cmd_seqkkt, "prop21": _cmd_prop21,
    "game-verify": _cmd_game_verify, "game-kkt": _cmd_game_kkt,
    "game-sufficiency": _cmd_game_sufficiency,
}


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", required=True, help="problem JSON file")
    p.add_argument("--grid", type=int, default=None, help="points per dimension")
    p.add_argument("--tau-feas", dest="tau_feas", type=float, default=None)
    p.add_argument("--tau-act", dest="tau_act", type=float, default=None)
    p.add_argument("--tau-solver", dest="tau_solver", type=float, default=None)
    p.add_argument("--mu-max", dest="mu_max", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="miopt",
        description="Verification toolkit for multiobjective interval-valued "
                    "optimization problems and games.")
    sub = parser.add_subparsers(dest="command", required=True)

    def cmd(name, help_text, game=False):
        p = sub.add_parser(name, help=help_text)
        if game:
            p.add_argument("--game", required=True, help="game JSON file")
        else:
            _add_problem_flags(p)
        p.add_argument("--json", dest="json_path", default=None,
                       help="write the full report as JSON to this path")
        return p

    p = cmd("verify", "check a solution concept at a point")
    p.add_argument("--point", required=True)
    p.add_argument("--concept", required=True,
                   choices=["weak-min", "weak-eps-min", "weak-eps-qmin"])
    p.add_argument("--eps", default=None)

    p = cmd("exist", "descend to a weak eps-minimal grid point")
    p.add_argument("--eps", required=True)
    p.add_argument("--start", default=None)

    p = cmd("evp", "Ekeland-type descent with (a)-(c) certificate")
    p.add_argument("--eps", required=True)
    p.add_argument("--x0", default=None)
    p.add_argument("--vector", action="store_true",
                   help="componentwise variant (scalar eps)")

    p = cmd("quasi", "existence pipeline for weak sqrt(eps)-quasi-minimal points")
    p.add_argument("--eps", required=True)

    p = cmd("thm33", "distance-penalized minimality implies quasi-minimality")
    p.add_argument("--point", required=True)
    p.add_argument("--eps", required=True)

    p = cmd("kkt", "multiplier certificate at a point")
    p.add_argument("--point", required=True)
    p.add_argument("--radius", type=float, default=0.0)
    p.add_argument("--cor41-eps", dest="cor41_eps", default=None,
                   help="accept residual up to sum(lambda_k * eps_k)")

    p = cmd("epskkt", "search a delta-ball for an approximate KKT point")
    p.add_argument("--point", required=True)
    p.add_argument("--eps", required=True)
    p.add_argument("--delta", type=float, required=True)

    p = cmd("bcq", "basic constraint qualification at a point")
    p.add_argument("--point", required=True)

    p = cmd("genconvex", "generalized convexity at a point over the grid")
    p.add_argument("--point", required=True)

    p = cmd("sufficiency", "KKT + generalized convexity => quasi-minimality")
    p.add_argument("--point", required=True)
    p.add_argument("--eps", required=True)

    p = cmd("modkkt", "modified eps-KKT point search")
    p.add_argument("--point", required=True)
    p.add_argument("--eps", required=True)

    p = cmd("seqkkt", "approximate KKT sequence verification")
    p.add_argument("--point", required=True)
    p.add_argument("--xs", required=True,
                   help="semicolon-separated sequence points, e.g. '1;0.5;0.25'")
    p.add_argument("--eps-seq", dest="eps_seq", required=True,
                   help="comma-separated positive eps values")
    p.add_argument("--inflate", default=None,
                   help="per-objective subdifferential inflation radii")

    p = cmd("prop21", "quasi-minimal => ball eps-minimal implication scan")
    p.add_argument("--eps0", type=float, required=True)

    p = cmd("game-verify", "equilibrium predicate for a profile", game=True)
    p.add_argument("--point", required=True)
    p.add_argument("--concept", required=True, choices=["ne", "qne"])
    p.add_argument("--eps", required=True)

    p = cmd("game-kkt", "per-player multiplier certificates", game=True)
    p.add_argument("--point", required=True)
    p.add_argument("--eps", required=True)
    p.add_argument("--mode", default="thm_5_2", choices=["thm_5_1", "thm_5_2"])
    p.add_argument("--delta", type=float, default=None)

    p = cmd("game-sufficiency", "per-player sufficiency pipeline", game=True)
    p.add_argument("--point", required=True)
    p.add_argument("--eps", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.monotonic()
    try:
        verdict, payload = _HANDLERS[args.command](args)
    except (UsageError, SchemaError, ExprError, GridError, GameError,
            CertificateError, PremiseError, DescentError, OSError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    elapsed = time.monotonic() - t0

    report = {"command": args.command, "verdict": verdict,
              "elapsed_seconds": elapsed, **_to_jsonable(payload)}
    print(f"{args.command}: {verdict}")
    for key in ("residual", "threshold", "distance", "point", "x_delta", "x_eps"):
        if key in report and report[key] is not None:
            print(f"  {key}: {report[key]}")
    if "lambda" in report:
        print(f"  lambda: {report['lambda']}  mu: {report['mu']}")
    if "deviation" in report:
        dev = report["deviation"]
        print(f"  improving deviation: player {dev['player']} -> {dev['strategy']}")
    if "config" in report:
        print(f"  config: {report['config']}")

    if args.json_path:
        with open(args.json_path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    return _EXIT.get(verdict, 2)


if __name__ == "__main__":
    sys.exit(main())
