"""Noncooperative game layer over per-player interval-valued losses.

A game is verified, never solved: every equilibrium concept reduces to
unilateral deviations, so each check is a per-player MIOP obtained by
freezing the opponents' blocks.  Per-player grids are independent and
the product grid is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .certificates import (CertificateReport, PremiseError, SearchOutcome,
                           eps_kkt_thm_4_1, gen_convexity_check, kkt_check)
from .expr import (Abs, Const, Expr, IVFunction, Max, Min, Power, Product,
                   Scale, Sum, Var, eval_expr, max_var_index, used_vars,
                   weak_gen_gradient, clarke_subdiff)
from .grid import GridSpec, feasible_grid, spec_for
from .problem import (DEFAULT_TOLERANCES, MIOProblem, Tolerances, as_epsilon,
                      feasible, is_weak_eps_minimal, is_weak_eps_quasi_minimal)


class GameError(ValueError):
    pass


def substitute(e: Expr, mapping: dict[int, Expr]) -> Expr:
    """Replace each Var(i) by mapping[i] (identity when absent)."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return mapping.get(e.index, e)
    if isinstance(e, Sum):
        return Sum(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Scale):
        return Scale(e.alpha, substitute(e.operand, mapping))
    if isinstance(e, Product):
        return Product(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Power):
        return Power(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Abs):
        return Abs(substitute(e.operand, mapping))
    if isinstance(e, Max):
        return Max(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Min):
        return Min(substitute(e.left, mapping), substitute(e.right, mapping))
    raise TypeError(f"unknown node {type(e)!r}")


@dataclass(frozen=True)
class Player:
    """One player's block: strategy dimension, own-block constraints and
    box, and loss objectives written over the full profile."""

    dim: int
    objectives: tuple[IVFunction, ...]
    constraints: tuple[Expr, ...]
    box_lo: tuple[float, ...]
    box_hi: tuple[float, ...]
    points_per_dim: int | None = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("player dim must be >= 1")
        if not self.objectives:
            raise ValueError("player needs at least one objective")
        if len(self.box_lo) != self.dim or len(self.box_hi) != self.dim:
            raise ValueError("player box dimension mismatch")


@dataclass(frozen=True)
class Game:
    players: tuple[Player, ...]
    name: str = ""
    tolerances: Tolerances = DEFAULT_TOLERANCES
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if len(self.players) < 2:
            raise GameError("a game needs at least 2 players")
        total = self.profile_dim
        for i, pl in enumerate(self.players):
            block = set(range(self.block_start(i), self.block_start(i) + pl.dim))
            for f in pl.objectives:
                if f.dim != total:
                    raise GameError(f"player {i} objective must be over the "
                                    f"profile dimension {total}")
            for g in pl.constraints:
                bad = used_vars(g) - block
                if bad:
                    raise GameError(f"player {i} constraint uses variables "
                                    f"{sorted(bad)} outside its own block "
                                    "(shared constraints are not supported)")
                if max_var_index(g) >= total:
                    raise GameError("constraint variable out of range")

    @property
    def n_players(self) -> int:
        return len(self.players)

    @property
    def profile_dim(self) -> int:
        return sum(p.dim for p in self.players)

    def block_start(self, i: int) -> int:
        return sum(p.dim for p in self.players[:i])

    def block(self, i: int, profile: Sequence[float]) -> np.ndarray:
        s = self.block_start(i)
        return np.asarray(profile, dtype=float)[s:s + self.players[i].dim]


def player_spec(game: Game, i: int) -> GridSpec:
    pl = game.players[i]
    if pl.points_per_dim is not None:
        return GridSpec(pl.points_per_dim)
    from .grid import default_points_per_dim

    return GridSpec(default_points_per_dim(pl.dim))


def fix_opponents(game: Game, i: int, u_bar: Sequence[float]) -> MIOProblem:
    """Player i's MIOP with every other block frozen at u_bar: own
    variables are renumbered to u0..u{n_i-1}, opponents' become constants."""
    u_arr = np.asarray(u_bar, dtype=float)
    if u_arr.shape != (game.profile_dim,):
        raise GameError(f"profile must have dimension {game.profile_dim}")
    if not 0 <= i < game.n_players:
        raise GameError(f"no player {i}")
    pl = game.players[i]
    start = game.block_start(i)
    mapping: dict[int, Expr] = {}
    for j in range(game.profile_dim):
        if start <= j < start + pl.dim:
            mapping[j] = Var(j - start)
        else:
            mapping[j] = Const(float(u_arr[j]))
    objectives = tuple(
        IVFunction(substitute(f.lower, mapping), substitute(f.upper, mapping), pl.dim)
        for f in pl.objectives)
    constraints = tuple(substitute(g, mapping) for g in pl.constraints)
    return MIOProblem(dim=pl.dim, objectives=objectives, constraints=constraints,
                      box_lo=pl.box_lo, box_hi=pl.box_hi,
                      name=f"{game.name or 'game'}/player{i}",
                      tolerances=game.tolerances)


def profile_feasible(game: Game, u_bar: Sequence[float]) -> bool:
    u_arr = np.asarray(u_bar, dtype=float)
    tau = game.tolerances.tau_feas
    for i, pl in enumerate(game.players):
        ui = game.block(i, u_arr)
        lo = np.asarray(pl.box_lo)
        hi = np.asarray(pl.box_hi)
        if np.any(ui < lo - tau) or np.any(ui > hi + tau):
            return False
        if any(eval_expr(g, u_arr) > tau for g in pl.constraints):
            return False
    return True


def _require_feasible(game: Game, u_bar) -> np.ndarray:
    u_arr = np.asarray(u_bar, dtype=float)
    if u_arr.shape != (game.profile_dim,):
        raise GameError(f"profile must have dimension {game.profile_dim}")
    if not profile_feasible(game, u_arr):
        raise GameError("profile is infeasible for some player")
    return u_arr


# ---------------------------------------------------------------------------
# Equilibrium predicates: reduction path (canonical)
# ---------------------------------------------------------------------------

def is_w_eps_ne(game: Game, u_bar, eps) -> bool:
    """Every player's strategy is weak eps-minimal against the frozen
    opponents on that player's own grid."""
    u_arr = _require_feasible(game, u_bar)
    for i in range(game.n_players):
        earr = as_epsilon(eps, len(game.players[i].objectives))
        prob = fix_opponents(game, i, u_arr)
        pts = feasible_grid(prob, player_spec(game, i))
        if not is_weak_eps_minimal(prob, game.block(i, u_arr), earr, pts):
            return False
    return True


def is_w_eps_qne(game: Game, u_bar, eps) -> bool:
    """Same with the distance-scaled handicap [0, eps_k * ||u_i - y_i||]."""
    u_arr = _require_feasible(game, u_bar)
    for i in range(game.n_players):
        earr = as_epsilon(eps, len(game.players[i].objectives))
        prob = fix_opponents(game, i, u_arr)
        pts = feasible_grid(prob, player_spec(game, i))
        if not is_weak_eps_quasi_minimal(prob, game.block(i, u_arr), earr, pts):
            return False
    return True


# ---------------------------------------------------------------------------
# Equilibrium predicates: direct profile scan (independent code path)
# ---------------------------------------------------------------------------

def find_deviation(game: Game, i: int, u_bar, eps, quasi: bool = False):
    """First grid deviation y_i of player i that strictly improves every
    loss objective past the handicap; None if no such deviation exists.

    Works directly on the full-profile expressions, without the
    fix_opponents reduction."""
    u_arr = np.asarray(u_bar, dtype=float)
    pl = game.players[i]
    earr = as_epsilon(eps, len(pl.objectives))
    start = game.block_start(i)
    spec = player_spec(game, i)
    tau = game.tolerances.tau_feas
    ui = game.block(i, u_arr)
    base = [(f.center(u_arr), f.halfwidth(u_arr)) for f in pl.objectives]

    from .grid import grid_points

    for y in grid_points(pl.box_lo, pl.box_hi, spec):
        profile = u_arr.copy()
        profile[start:start + pl.dim] = y
        if any(eval_expr(g, profile) > tau for g in pl.constraints):
            continue
        scale = float(np.linalg.norm(ui - y)) if quasi else 1.0
        better = True
        for k, f in enumerate(pl.objectives):
            shift = earr[k] * scale / 2.0
            if not (f.center(profile) + shift < base[k][0]
                    and f.halfwidth(profile) + shift < base[k][1]):
                better = False
                break
        if better:
            return y
    return None


def is_w_eps_ne_direct(game: Game, u_bar, eps) -> bool:
    u_arr = _require_feasible(game, u_bar)
    return all(find_deviation(game, i, u_arr, eps, quasi=False) is None
               for i in range(game.n_players))


def is_w_eps_qne_direct(game: Game, u_bar, eps) -> bool:
    u_arr = _require_feasible(game, u_bar)
    return all(find_deviation(game, i, u_arr, eps, quasi=True) is None
               for i in range(game.n_players))


# ---------------------------------------------------------------------------
# Per-player certificates
# ---------------------------------------------------------------------------

@dataclass
class PlayerOutcome:
    player: int
    report: CertificateReport | None = None
    search: SearchOutcome | None = None


def game_kkt(game: Game, u_bar, eps, mode: str = "thm_5_2",
             delta: float | None = None) -> list[PlayerOutcome]:
    """Per-player multiplier certificates at an equilibrium profile.

    mode "thm_5_2": each player must be at a weak eps-quasi equilibrium;
    runs kkt_check with the multiplier-dependent radius sum(lam_k*eps_k).
    mode "thm_5_1": each player must be at a weak eps equilibrium; runs
    the ball-grid search with radius (1/delta)*max(eps).
    """
    u_arr = _require_feasible(game, u_bar)
    if mode not in ("thm_5_1", "thm_5_2"):
        raise GameError(f"unknown mode {mode!r}")
    if mode == "thm_5_1" and (delta is None or delta <= 0):
        raise GameError("mode thm_5_1 needs delta > 0")

    outcomes = []
    for i in range(game.n_players):
        earr = as_epsilon(eps, len(game.players[i].objectives))
        if not np.any(earr > 0):
            raise ValueError("eps must be nonzero")
        prob = fix_opponents(game, i, u_arr)
        spec = player_spec(game, i)
        ui = game.block(i, u_arr)
        pts = feasible_grid(prob, spec)
        if mode == "thm_5_2":
            if not is_weak_eps_quasi_minimal(prob, ui, earr, pts):
                raise PremiseError(f"player {i}: profile is not a weak "
                                   "eps-quasi equilibrium on its grid")
            report = kkt_check(prob, ui, cor41_eps=earr)
            outcomes.append(PlayerOutcome(player=i, report=report))
        else:
            search = eps_kkt_thm_4_1(prob, ui, earr, delta, spec)
            outcomes.append(PlayerOutcome(player=i, search=search))
    return outcomes


@dataclass
class GameSufficiencyReport:
    verdict: str                  # holds | hypothesis-failed | inconclusive
    per_player: list = field(default_factory=list)
    qne_confirmed: bool | None = None


def game_sufficiency(game: Game, u_bar, eps) -> GameSufficiencyReport:
    """Per-player multiplier condition plus generalized convexity; when
    every player passes, the profile must verify as a weak eps-quasi
    equilibrium (a grid counterexample raises: it would be a bug)."""
    u_arr = _require_feasible(game, u_bar)
    report = GameSufficiencyReport(verdict="holds")
    for i in range(game.n_players):
        earr = as_epsilon(eps, len(game.players[i].objectives))
        if not np.any(earr > 0):
            raise ValueError("eps must be nonzero")
        prob = fix_opponents(game, i, u_arr)
        ui = game.block(i, u_arr)
        obj_polys = [weak_gen_gradient(f, ui) for f in prob.objectives]
        con_polys = [clarke_subdiff(g, ui) for g in prob.constraints]
        if not all(p.exact for p in obj_polys + con_polys):
            report.per_player.append((i, "inexact"))
            report.verdict = "inconclusive"
            continue
        kkt = kkt_check(prob, ui, cor41_eps=earr)
        if not kkt.holds:
            report.per_player.append((i, f"kkt-{kkt.verdict}"))
            if report.verdict == "holds":
                report.verdict = "hypothesis-failed"
            continue
        pts = feasible_grid(prob, player_spec(game, i))
        gc = gen_convexity_check(prob, ui, pts)
        if not gc.holds:
            report.per_player.append((i, f"genconvex-{gc.verdict}"))
            if gc.verdict == "inconclusive":
                report.verdict = "inconclusive"
            elif report.verdict == "holds":
                report.verdict = "hypothesis-failed"
            continue
        report.per_player.append((i, "ok"))
    if report.verdict != "holds":
        return report
    qne = is_w_eps_qne(game, u_arr, eps)
    if not qne:
        raise RuntimeError("per-player sufficiency hypotheses hold but the "
                           "grid refutes the equilibrium: implementation bug")
    report.qne_confirmed = True
    return report
