"""MIOP data model, feasibility, active sets, and solution concepts.

Solution concepts are decided relative to an explicit finite candidate
set (normally a feasible grid): the quantifier "for all of S" is
undecidable for this function class, so every verdict is honest about
its discretization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .expr import Expr, IVFunction, eval_expr, max_var_index


@dataclass(frozen=True)
class Tolerances:
    tau_feas: float = 1e-9
    tau_act: float = 1e-6
    tau_solver: float = 1e-8
    mu_max: float = 1e3


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class MIOProblem:
    """Objectives F_k (interval-valued), constraints g_j <= 0, and a box
    bounding the oracle search."""

    dim: int
    objectives: tuple[IVFunction, ...]
    constraints: tuple[Expr, ...]
    box_lo: tuple[float, ...]
    box_hi: tuple[float, ...]
    name: str = ""
    tolerances: Tolerances = DEFAULT_TOLERANCES
    # original expression strings, kept for bit-exact round-trips
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.objectives:
            raise ValueError("need at least one objective")
        for f in self.objectives:
            if f.dim != self.dim:
                raise ValueError("objective dimension mismatch")
        for g in self.constraints:
            if max_var_index(g) >= self.dim:
                raise ValueError("constraint uses out-of-range variable")
        if len(self.box_lo) != self.dim or len(self.box_hi) != self.dim:
            raise ValueError("box dimension mismatch")
        for lo, hi in zip(self.box_lo, self.box_hi):
            if not lo < hi:
                raise ValueError(f"box must have lo < hi, got [{lo}, {hi}]")

    @property
    def n_objectives(self) -> int:
        return len(self.objectives)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)


def as_epsilon(eps, m: int) -> np.ndarray:
    """Validate a per-objective epsilon vector (scalars broadcast)."""
    arr = np.atleast_1d(np.asarray(eps, dtype=float))
    if arr.size == 1 and m > 1:
        arr = np.full(m, float(arr[0]))
    if arr.size != m:
        raise ValueError(f"epsilon has {arr.size} components, expected {m}")
    if np.any(arr < 0):
        raise ValueError("epsilon components must be >= 0")
    return arr


def feasible(problem: MIOProblem, u: Sequence[float], tau_feas: float | None = None) -> bool:
    """True iff g_j(u) <= tau_feas for every constraint."""
    tau = problem.tolerances.tau_feas if tau_feas is None else tau_feas
    return all(eval_expr(g, u) <= tau for g in problem.constraints)


def active_set(problem: MIOProblem, u: Sequence[float], tau_act: float | None = None) -> tuple[int, ...]:
    """Indices (0-based) of constraints with |g_j(u)| <= tau_act."""
    tau = problem.tolerances.tau_act if tau_act is None else tau_act
    return tuple(j for j, g in enumerate(problem.constraints) if abs(eval_expr(g, u)) <= tau)


def _dominates(problem: MIOProblem, z: Sequence[float], u_cw: list[tuple[float, float]],
               shifts: np.ndarray) -> bool:
    """True iff F_k(z) + [0, shifts[k]] strictly CW-dominates F_k(u) for all k."""
    for k, f in enumerate(problem.objectives):
        cu, wu = u_cw[k]
        cz = f.center(z) + shifts[k] / 2.0
        wz = f.halfwidth(z) + shifts[k] / 2.0
        if not (cz < cu and wz < wu):
            return False
    return True


def _cw_at(problem: MIOProblem, u: Sequence[float]) -> list[tuple[float, float]]:
    return [(f.center(u), f.halfwidth(u)) for f in problem.objectives]


def is_weak_minimal(problem: MIOProblem, u: Sequence[float],
                    candidates: Iterable[Sequence[float]]) -> bool:
    """No candidate strictly CW-dominates u in every objective."""
    u_cw = _cw_at(problem, u)
    zero = np.zeros(problem.n_objectives)
    return not any(_dominates(problem, z, u_cw, zero) for z in candidates)


def is_weak_eps_minimal(problem: MIOProblem, u: Sequence[float], eps,
                        candidates: Iterable[Sequence[float]]) -> bool:
    """No candidate dominates u even after the handicap [0, eps_k]."""
    shifts = as_epsilon(eps, problem.n_objectives)
    u_cw = _cw_at(problem, u)
    return not any(_dominates(problem, z, u_cw, shifts) for z in candidates)


def is_weak_eps_quasi_minimal(problem: MIOProblem, u: Sequence[float], eps,
                              candidates: Iterable[Sequence[float]]) -> bool:
    """No candidate dominates u after the distance-scaled handicap
    [0, eps_k * ||z - u||]."""
    earr = as_epsilon(eps, problem.n_objectives)
    u_arr = np.asarray(u, dtype=float)
    u_cw = _cw_at(problem, u)
    for z in candidates:
        dist = float(np.linalg.norm(np.asarray(z, dtype=float) - u_arr))
        if _dominates(problem, z, u_cw, earr * dist):
            return False
    return True


def restrict_to_ball(candidates: Iterable[Sequence[float]], center: Sequence[float],
                     radius: float) -> list[np.ndarray]:
    """Candidates within the closed ball (for local solution variants)."""
    c = np.asarray(center, dtype=float)
    return [np.asarray(z, dtype=float) for z in candidates
            if np.linalg.norm(np.asarray(z, dtype=float) - c) <= radius]
