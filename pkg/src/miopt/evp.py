"""Constructive descent engines over the feasible grid.

These turn the existence arguments (descent chains and the
Ekeland-type fixed-point iteration) into terminating algorithms: the
grid is finite and every step strictly decreases the scalar merit
sum_k (F_k^c + F_k^w), so iteration always stops.  Each engine
post-verifies its returned point against the full feasible grid; the
verification is part of the operation, not optional.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import GridSpec, ValueTable, feasible_grid, value_table
from .problem import (MIOProblem, as_epsilon, is_weak_eps_minimal,
                      is_weak_eps_quasi_minimal)


class DescentError(ValueError):
    pass


class PremiseError(DescentError):
    """The operation's hypothesis fails at the supplied start point."""


@dataclass
class DescentTrace:
    iterates: list = field(default_factory=list)
    merits: list = field(default_factory=list)
    reason: str = ""


@dataclass
class EvpCertificate:
    point: np.ndarray
    a_holds: bool
    b_value: float
    b_bound: float
    c_holds: bool
    trace: DescentTrace

    @property
    def b_holds(self) -> bool:
        return self.b_value <= self.b_bound + 1e-12

    @property
    def all_hold(self) -> bool:
        return self.a_holds and self.b_holds and self.c_holds


def _grid_index(table: ValueTable, u: Sequence[float]) -> int:
    u_arr = np.asarray(u, dtype=float)
    dists = np.linalg.norm(table.points - u_arr, axis=1)
    i = int(np.argmin(dists))
    if dists[i] > 1e-9:
        raise DescentError(f"point {list(u_arr)} is not on the feasible grid "
                           f"(nearest grid point at distance {dists[i]:.3g})")
    return i


def _prepare(problem: MIOProblem, spec: GridSpec) -> tuple[list, ValueTable, np.ndarray, np.ndarray, np.ndarray]:
    pts = feasible_grid(problem, spec)
    if not pts:
        raise DescentError("feasible grid is empty")
    table = value_table(problem, pts)
    sum_c = np.sum(table.centers, axis=0)
    sum_w = np.sum(table.widths, axis=0)
    merit = sum_c + sum_w
    return pts, table, sum_c, sum_w, merit


def descent_eps_minimal(problem: MIOProblem, eps, spec: GridSpec,
                        start: Sequence[float]) -> tuple[np.ndarray, DescentTrace]:
    """Descend through A(u) = {z : sum F(z) + [0, sum eps] CW-dominates
    sum F(u)} until it empties; the endpoint is weak eps-minimal on the
    grid (per-objective domination implies sum domination)."""
    earr = as_epsilon(eps, problem.n_objectives)
    eps_sum = float(np.sum(earr))
    if eps_sum <= 0:
        raise ValueError("eps must be nonzero")
    pts, table, sum_c, sum_w, merit = _prepare(problem, spec)
    i = _grid_index(table, start)

    trace = DescentTrace()
    trace.iterates.append(table.points[i].copy())
    trace.merits.append(float(merit[i]))
    # each step drops sum F^w by more than eps_sum / 2
    max_iters = int(2.0 * sum_w[i] / eps_sum) + 2
    for _ in range(max_iters):
        in_a = (sum_c + eps_sum / 2.0 < sum_c[i]) & (sum_w + eps_sum / 2.0 < sum_w[i])
        if not np.any(in_a):
            trace.reason = "A(u) empty"
            break
        cand = np.flatnonzero(in_a)
        i = int(cand[np.argmin(merit[cand])])
        trace.iterates.append(table.points[i].copy())
        trace.merits.append(float(merit[i]))
    else:
        raise DescentError("descent exceeded its guaranteed iteration bound")

    point = table.points[i].copy()
    if not is_weak_eps_minimal(problem, point, earr, pts):
        raise DescentError("descent endpoint failed the grid eps-minimality check")
    return point, trace


def _t_map_mask(sum_c: np.ndarray, sum_w: np.ndarray, dists: np.ndarray,
                rate: float, i: int) -> np.ndarray:
    # non-strict CW order with the distance-scaled shift [0, rate*d]
    shift = rate * dists / 2.0
    return (sum_c + shift <= sum_c[i]) & (sum_w + shift <= sum_w[i])


def evp_descent(problem: MIOProblem, eps, spec: GridSpec,
                x0: Sequence[float]) -> tuple[np.ndarray, EvpCertificate]:
    """Ekeland-type iteration on the summed objective.

    Requires the premise that no grid point sum-dominates x0 with the
    handicap [0, sum eps]; returns a fixed point of the T-map with the
    (a)-(c) conclusions grid-verified.  The single-objective case uses the
    scalar bound sqrt(eps).
    """
    earr = as_epsilon(eps, problem.n_objectives)
    eps_sum = float(np.sum(earr))
    if eps_sum <= 0:
        raise ValueError("eps must be nonzero")
    rate = float(np.sum(np.sqrt(earr)))
    pts, table, sum_c, sum_w, merit = _prepare(problem, spec)
    i0 = _grid_index(table, x0)

    dominated = (sum_c + eps_sum / 2.0 < sum_c[i0]) & (sum_w + eps_sum / 2.0 < sum_w[i0])
    if np.any(dominated):
        raise PremiseError("x0 violates the premise: some grid point sum-dominates it "
                           "(run descent_eps_minimal first)")

    trace = DescentTrace()
    i = i0
    trace.iterates.append(table.points[i].copy())
    trace.merits.append(float(merit[i]))
    while True:
        dists = np.linalg.norm(table.points - table.points[i], axis=1)
        mask = _t_map_mask(sum_c, sum_w, dists, rate, i)
        mask[i] = False
        if not np.any(mask):
            trace.reason = "T(u) = {u}"
            break
        cand = np.flatnonzero(mask)
        # any v != u in T(u) has strictly smaller merit: finite descent
        i = int(cand[np.argmin(merit[cand])])
        trace.iterates.append(table.points[i].copy())
        trace.merits.append(float(merit[i]))

    u_bar = table.points[i].copy()
    a_holds = not np.any((sum_c + eps_sum / 2.0 < sum_c[i]) & (sum_w + eps_sum / 2.0 < sum_w[i]))
    b_value = float(np.linalg.norm(np.asarray(x0, dtype=float) - u_bar))
    b_bound = eps_sum / rate
    dists = np.linalg.norm(table.points - u_bar, axis=1)
    shift = rate * dists / 2.0
    c_viol = (sum_c + shift < sum_c[i]) & (sum_w + shift < sum_w[i])
    cert = EvpCertificate(point=u_bar, a_holds=a_holds, b_value=b_value,
                          b_bound=b_bound, c_holds=not np.any(c_viol), trace=trace)
    return u_bar, cert


def evp_descent_vector(problem: MIOProblem, epsilon: float, spec: GridSpec,
                       x0: Sequence[float]) -> tuple[np.ndarray, EvpCertificate]:
    """Componentwise Ekeland-type iteration (uniform epsilon).

    Premise: x0 is weak eps-minimal on the grid with eps = (epsilon,...).
    Returns u_bar with (a) grid eps-minimality, (b) ||x0 - u_bar|| <=
    sqrt(epsilon), (c) grid sqrt(epsilon)-quasi-minimality.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    m = problem.n_objectives
    earr = np.full(m, float(epsilon))
    root = float(np.sqrt(epsilon))
    pts, table, sum_c, sum_w, merit = _prepare(problem, spec)
    i0 = _grid_index(table, x0)

    if not is_weak_eps_minimal(problem, table.points[i0], earr, pts):
        raise PremiseError("x0 is not weak eps-minimal on the grid")

    trace = DescentTrace()
    i = i0
    trace.iterates.append(table.points[i].copy())
    trace.merits.append(float(merit[i]))
    while True:
        dists = np.linalg.norm(table.points - table.points[i], axis=1)
        shift = root * dists / 2.0
        mask = np.all(table.centers + shift[None, :] <= table.centers[:, i][:, None], axis=0) \
            & np.all(table.widths + shift[None, :] <= table.widths[:, i][:, None], axis=0)
        mask[i] = False
        if not np.any(mask):
            trace.reason = "T(u) = {u}"
            break
        cand = np.flatnonzero(mask)
        i = int(cand[np.argmin(merit[cand])])
        trace.iterates.append(table.points[i].copy())
        trace.merits.append(float(merit[i]))

    u_bar = table.points[i].copy()
    a_holds = is_weak_eps_minimal(problem, u_bar, earr, pts)
    b_value = float(np.linalg.norm(np.asarray(x0, dtype=float) - u_bar))
    c_holds = is_weak_eps_quasi_minimal(problem, u_bar, np.full(m, root), pts)
    cert = EvpCertificate(point=u_bar, a_holds=a_holds, b_value=b_value,
                          b_bound=root, c_holds=c_holds, trace=trace)
    return u_bar, cert


@dataclass
class QuasiExistenceReport:
    point: np.ndarray
    qm_verified: bool
    ball_check: bool | None   # Prop 2.1 ball check when eps is uniform
    descent_trace: DescentTrace
    evp_certificate: EvpCertificate


def quasi_existence(problem: MIOProblem, eps, spec: GridSpec) -> QuasiExistenceReport:
    """Run the descent chain then the Ekeland iteration; the result is
    grid-verified weak sqrt(eps)-quasi-minimal, with the extra ball
    check when eps is uniform."""
    earr = as_epsilon(eps, problem.n_objectives)
    if not np.any(earr > 0):
        raise ValueError("eps must be nonzero")
    pts, table, _, _, _ = _prepare(problem, spec)
    start = table.points[0]
    x0, d_trace = descent_eps_minimal(problem, earr, spec, start)
    u_bar, cert = evp_descent(problem, earr, spec, x0)

    eps_prime = np.sqrt(earr)
    qm_ok = is_weak_eps_quasi_minimal(problem, u_bar, eps_prime, pts)

    ball_check = None
    if np.all(earr == earr[0]) and earr[0] > 0:
        eps0 = float(earr[0])
        root = float(np.sqrt(eps0))
        ball = [p for p in pts if np.linalg.norm(p - u_bar) <= root]
        ball_check = is_weak_eps_minimal(problem, u_bar, np.full(len(earr), eps0), ball)
    return QuasiExistenceReport(point=u_bar, qm_verified=qm_ok, ball_check=ball_check,
                                descent_trace=d_trace, evp_certificate=cert)
