"""Convex weight design on the simplex, KKT certificates, and ordering-based fits.

The design objective is

    J(alpha) = 1/2 ||alpha - alpha0||^2 + eta * sum_i alpha_i log alpha_i

over the simplex intersected with {A alpha <= b}. For eta >= 0 it is strictly
convex, so the minimizer is unique. Stationarity reads

    (alpha_i - alpha0_i) + eta (1 + log alpha_i) + (A^T lambda)_i + nu = 0

on every coordinate above the positivity floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from ._io import DomainError, ValidationError, is_number, load_json_object, read_bytes
from .components import COMPONENTS, ComponentVector
from .composite import WeightVector

FLOOR = 1e-12
N = 6


@dataclass(frozen=True)
class DesignProblem:
    prior: tuple[float, ...]
    eta: float = 0.0
    A: tuple[tuple[float, ...], ...] = ()
    b: tuple[float, ...] = ()

    def __post_init__(self):
        problems = []
        if len(self.prior) != N:
            problems.append("prior must have six entries")
        elif not all(math.isfinite(p) for p in self.prior):
            problems.append("prior entries must be finite")
        if not self.eta >= 0:
            problems.append("eta must be >= 0")
        if len(self.A) != len(self.b):
            problems.append("constraint rows and bounds differ in length")
        if any(len(row) != N for row in self.A):
            problems.append("every constraint row needs six coefficients")
        if problems:
            raise ValidationError(problems)

    @property
    def m(self) -> int:
        return len(self.b)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        A = np.array(self.A, dtype=float).reshape(self.m, N)
        return np.array(self.prior, dtype=float), A, np.array(self.b, dtype=float)

    def objective(self, alpha) -> float:
        a = np.asarray(alpha, dtype=float)
        a0 = np.array(self.prior)
        ent = sum(v * math.log(v) for v in a if v > 0)
        return 0.5 * float(np.dot(a - a0, a - a0)) + self.eta * ent

    def to_dict(self) -> dict:
        return {
            "prior": list(self.prior),
            "eta": self.eta,
            "constraints": [{"a": list(r), "b": bi} for r, bi in zip(self.A, self.b)],
        }


def parse_problem(raw: bytes | str) -> DesignProblem:
    obj = load_json_object(read_bytes(raw))
    problems = []
    extra = set(obj) - {"prior", "eta", "constraints"}
    if extra:
        problems.append(f"unknown key(s) {', '.join(sorted(extra))}")
    prior = obj.get("prior")
    if not (isinstance(prior, list) and len(prior) == N and all(is_number(v) for v in prior)):
        problems.append("prior must be six numbers")
    eta = obj.get("eta", 0.0)
    if not is_number(eta):
        problems.append("eta must be a number")
    A, b = [], []
    for j, c in enumerate(obj.get("constraints", [])):
        ok = isinstance(c, dict) and set(c) == {"a", "b"}
        ok = ok and isinstance(c["a"], list) and len(c["a"]) == N and all(is_number(v) for v in c["a"])
        ok = ok and is_number(c["b"])
        if not ok:
            problems.append(f"constraints[{j}] must be {{a: six numbers, b: number}}")
            continue
        A.append(tuple(float(v) for v in c["a"]))
        b.append(float(c["b"]))
    if problems:
        raise ValidationError(problems)
    return DesignProblem(tuple(float(v) for v in prior), float(eta), tuple(A), tuple(b))


@dataclass(frozen=True)
class DesignSolution:
    alpha: tuple[float, ...]
    lambdas: tuple[float, ...]
    nu: float
    kkt_residual: float
    iterations: int
    floored: tuple[int, ...] = ()

    @property
    def weights(self) -> WeightVector:
        return WeightVector.from_sequence(self.alpha)

    def to_dict(self) -> dict:
        return {
            "alpha": list(self.alpha),
            "multipliers": {"lambda": list(self.lambdas), "nu": self.nu},
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
        }


class InfeasibleDesign(ValueError):
    """The constraint set misses the simplex. ``certificate`` indexes a minimal conflicting subset."""

    def __init__(self, certificate: Sequence[int]):
        self.certificate = list(certificate)
        super().__init__(
            "constraints infeasible on the simplex; conflicting subset: "
            + ", ".join(str(j) for j in self.certificate)
        )


# -- KKT residual ----------------------------------------------------------


@dataclass(frozen=True)
class KKTReport:
    stationarity: float
    complementarity: float
    infeasibility: float
    floored: tuple[int, ...] = ()

    @property
    def total(self) -> float:
        return self.stationarity + self.complementarity + self.infeasibility


def _gradient(alpha: np.ndarray, prior: np.ndarray, eta: float) -> np.ndarray:
    g = alpha - prior
    if eta > 0:
        g = g + eta * (1.0 + np.log(np.maximum(alpha, FLOOR)))
    return g


def kkt_report(alpha, lambdas, nu: float, p: DesignProblem) -> KKTReport:
    """Stationarity, complementary slackness and primal feasibility, each in max-norm.

    Coordinates at or below the positivity floor carry an implicit bound
    multiplier, so only a negative stationarity value counts there; with
    eta > 0 the gradient uses the floored logarithm and the coordinate is
    reported in ``floored``.
    """
    a = np.asarray(alpha, dtype=float)
    lam = np.asarray(lambdas, dtype=float).reshape(p.m)
    prior, A, b = p.arrays()
    stat = _gradient(a, prior, p.eta) + A.T @ lam + nu
    low = a <= FLOOR
    s_int = np.abs(stat[~low]).max(initial=0.0)
    s_low = np.maximum(0.0, -stat[low]).max(initial=0.0)
    slack = b - A @ a
    comp = max(np.abs(lam * slack).max(initial=0.0), np.maximum(0.0, -lam).max(initial=0.0))
    infeas = max(
        np.maximum(0.0, -slack).max(initial=0.0),
        abs(a.sum() - 1.0),
        np.maximum(0.0, -a).max(initial=0.0),
    )
    floored = tuple(int(i) for i in np.flatnonzero(low)) if p.eta > 0 else ()
    return KKTReport(float(max(s_int, s_low)), float(comp), float(infeas), floored)


def kkt_residual(alpha, multipliers, p: DesignProblem) -> float:
    """Max stationarity + max complementarity violation + max primal infeasibility.

    ``multipliers`` is ``(lambdas, nu)``.
    """
    lambdas, nu = multipliers
    return kkt_report(alpha, lambdas, nu, p).total


# -- feasibility -----------------------------------------------------------


def _feasible_lp(A: np.ndarray, b: np.ndarray, rows: Sequence[int], cost=None):
    c = np.zeros(N) if cost is None else cost
    res = linprog(
        c,
        A_ub=A[list(rows)] if len(rows) else None,
        b_ub=b[list(rows)] if len(rows) else None,
        A_eq=np.ones((1, N)),
        b_eq=[1.0],
        bounds=[(0, None)] * N,
        method="highs",
    )
    return res


def infeasibility_certificate(p: DesignProblem) -> list[int] | None:
    """None if feasible, else an irreducible subset of constraints that misses the simplex."""
    _, A, b = p.arrays()
    rows = list(range(p.m))
    if _feasible_lp(A, b, rows).status != 2:
        return None
    for j in list(rows):
        trial = [r for r in rows if r != j]
        if _feasible_lp(A, b, trial).status == 2:
            rows = trial
    return rows


def _interior_point(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Point maximizing the smallest slack over all inequalities including alpha >= 0."""
    m = len(b)
    norms = np.linalg.norm(A, axis=1) if m else np.zeros(0)
    c = np.zeros(N + 1)
    c[-1] = -1.0
    rows = [np.r_[-np.eye(N)[i], 1.0] for i in range(N)]
    rows += [np.r_[A[j], norms[j]] for j in range(m)]
    rhs = np.r_[np.zeros(N), b]
    res = linprog(
        c, A_ub=np.array(rows), b_ub=rhs,
        A_eq=np.r_[np.ones(N), 0.0][None], b_eq=[1.0],
        bounds=[(None, None)] * N + [(0, 1)], method="highs",
    )
    return np.asarray(res.x[:N])


def _start_point(A: np.ndarray, b: np.ndarray, rng: np.random.Generator | None) -> np.ndarray:
    center = _interior_point(A, b)
    if rng is None:
        return center
    res = _feasible_lp(A, b, range(len(b)), cost=rng.normal(size=N))
    vertex = np.asarray(res.x)
    t = rng.uniform(0.0, 0.9)
    return (1.0 - t) * center + t * vertex


# -- active-set Newton solver ----------------------------------------------


def _equality_newton(x, prior, eta, E, f, free, max_iter=100):
    """Minimize J over {E x = f} with coordinates outside ``free`` pinned at 0.

    Returns (x, y, iterations, low) with y the equality multipliers under the
    convention grad + E^T y = 0, and ``low`` the free coordinates that hit the
    positivity floor (eta > 0 only).
    """
    x = x.copy()
    x[~free] = 0.0
    Ef = E[:, free]
    k = Ef.shape[0]
    y = np.zeros(k)
    it = 0
    for it in range(1, max_iter + 1):
        xf = x[free]
        g = _gradient(x, prior, eta)[free]
        h = np.ones_like(xf)
        if eta > 0:
            h = h + eta / np.maximum(xf, FLOOR)
        # Schur complement keeps each coordinate's step accurate when h spans many scales
        hinv = 1.0 / h
        S = (Ef * hinv) @ Ef.T
        rhs = Ef @ (hinv * -g) - (f - Ef @ xf)
        if k:
            try:
                y = np.linalg.solve(S, rhs)
            except np.linalg.LinAlgError:
                y = np.linalg.lstsq(S, rhs, rcond=None)[0]
        d = -(g + Ef.T @ y) * hinv
        step = 1.0
        if eta > 0:
            neg = d < 0
            if np.any(neg):
                step = min(1.0, 0.99 * float(np.min(-xf[neg] / d[neg])))
        x_new = x.copy()
        x_new[free] = xf + step * d
        x = x_new
        if eta > 0 and np.any(x[free] <= FLOOR):
            break
        rel = np.abs(d) / np.maximum(xf, FLOOR) if eta > 0 else np.abs(d)
        if step == 1.0 and np.max(np.abs(d), initial=0.0) < 1e-13 and np.max(rel, initial=0.0) < 1e-10:
            break
    low = free & (x <= FLOOR) if eta > 0 else np.zeros(N, dtype=bool)
    return x, y, it, low


def _solve_from(p: DesignProblem, x0: np.ndarray, tol: float, max_outer: int = 500):
    prior, A, b = p.arrays()
    m = p.m
    # inequality rows: general constraints first, then -alpha_i <= 0
    G = np.vstack([A, -np.eye(N)]) if m else -np.eye(N)
    h = np.r_[b, np.zeros(N)]
    x = np.clip(x0, 0.0, None)
    x = x / x.sum()
    slack = h - G @ x
    work = set(int(j) for j in np.flatnonzero(slack <= 1e-12))
    # keep a linearly independent working set
    work = _independent(G, work)
    iters = 0
    for _ in range(max_outer):
        bounds = sorted(j - m for j in work if j >= m)
        gen = sorted(j for j in work if j < m)
        free = np.ones(N, dtype=bool)
        free[bounds] = False
        E = np.vstack([np.ones((1, N)), A[gen]]) if gen else np.ones((1, N))
        f = np.r_[1.0, b[gen]]
        z, y, it, low = _equality_newton(x, prior, p.eta, E, f, free)
        iters += it
        if np.any(low):
            # entropy optimum sits below the floor; pin those coordinates at 0
            for i in np.flatnonzero(low):
                work.add(m + int(i))
            z[low] = 0.0
            x = z
            continue
        dirn = z - x
        Gd = G @ dirn
        slack = h - G @ x
        t, block = 1.0, None
        for j in range(m + N):
            if j in work or Gd[j] <= 1e-15:
                continue
            tj = max(0.0, slack[j]) / Gd[j]
            if tj < t:
                t, block = tj, j
        # t == 1 takes z exactly; x + (z - x) loses tiny coordinates to rounding
        x = z if t == 1.0 else x + t * dirn
        if block is not None:
            work.add(block)
            continue
        # stationary on the working set: check multiplier signs
        nu = float(y[0])
        lam = np.zeros(m)
        lam[gen] = y[1:]
        grad = _gradient(x, prior, p.eta)
        mu = grad + A.T @ lam + nu  # multipliers of pinned bounds
        candidates = [(lam[j], j) for j in gen] + [(mu[i], m + i) for i in bounds]
        worst = min(candidates, default=(0.0, None))
        if worst[0] < -max(tol * 1e-3, 1e-14):
            work.discard(worst[1])
            if worst[1] >= m:
                x[worst[1] - m] = max(x[worst[1] - m], FLOOR * 100)
            continue
        return x, np.maximum(lam, 0.0), nu, iters
    raise RuntimeError("active-set iteration limit reached")


def _independent(G: np.ndarray, rows: set[int]) -> set[int]:
    keep: list[int] = []
    basis = np.ones((1, N))
    for j in sorted(rows):
        trial = np.vstack([basis, G[j]])
        if np.linalg.matrix_rank(trial, tol=1e-10) == trial.shape[0]:
            basis = trial
            keep.append(j)
    return set(keep)


def solve_weights(p: DesignProblem, tol: float = 1e-8, seed: int | None = None) -> DesignSolution:
    """Unique minimizer of the design objective with a KKT certificate.

    A feasibility LP runs first; infeasible problems raise
    :class:`InfeasibleDesign`. The solver is a primal active-set method whose
    equality subproblems are solved by Newton's method. ``seed`` picks a
    random feasible start; the answer does not depend on it.
    """
    if not tol > 0:
        raise DomainError("tol must be > 0")
    cert = infeasibility_certificate(p)
    if cert is not None:
        raise InfeasibleDesign(cert)
    _, A, b = p.arrays()
    rng = None if seed is None else np.random.default_rng(seed)
    x0 = _start_point(A, b, rng)
    alpha, lam, nu, iters = _solve_from(p, x0, tol)
    alpha = np.where(alpha < 0, 0.0, alpha)
    rep = kkt_report(alpha, lam, nu, p)
    if rep.total > tol:
        raise RuntimeError(f"solver finished with KKT residual {rep.total:.3e} > tol {tol:.1e}")
    return DesignSolution(tuple(map(float, alpha)), tuple(map(float, lam)), nu, rep.total, iters, rep.floored)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / ks > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


# -- identifiability from orderings ---------------------------------------


@dataclass(frozen=True)
class OrderingFit:
    alpha: tuple[float, ...]
    margin: float
    unique: bool
    alternatives: int = field(default=0)

    @property
    def satisfiable(self) -> bool:
        return self.margin > 0

    @property
    def weights(self) -> WeightVector:
        return WeightVector.from_sequence(self.alpha)


def _as_vec(x) -> np.ndarray:
    if isinstance(x, ComponentVector):
        return x.as_array()
    return np.asarray(x, dtype=float)


def fit_weights_from_orderings(pairs, n_checks: int = 20, seed: int = 0, agree_tol: float = 1e-6) -> OrderingFit:
    """Max-min-margin weights for a list of (x, y) pairs meaning R(x) > R(y).

    ``unique`` is set when re-solving with ``n_checks`` random secondary
    objectives over the optimal face returns the same vector.
    """
    pairs = list(pairs)
    if not pairs:
        raise DomainError("need at least one ordered pair")
    D = np.array([_as_vec(x) - _as_vec(y) for x, y in pairs])
    k = len(D)
    A_ub = np.hstack([-D, np.ones((k, 1))])
    b_ub = np.zeros(k)
    A_eq = np.r_[np.ones(N), 0.0][None]
    bounds = [(0, None)] * N + [(None, None)]
    c = np.zeros(N + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"margin LP failed: {res.message}")
    alpha = np.maximum(res.x[:N], 0.0)
    alpha /= alpha.sum()
    margin = float(res.x[-1])

    rng = np.random.default_rng(seed)
    slack = 1e-9 * max(1.0, abs(margin))
    # optimal face: every pair keeps margin >= t* - slack
    face_A = -D
    face_b = np.full(k, -(margin - slack))
    agree = True
    for _ in range(n_checks):
        cost = rng.normal(size=N)
        alt = linprog(cost, A_ub=face_A, b_ub=face_b, A_eq=np.ones((1, N)), b_eq=[1.0],
                      bounds=[(0, None)] * N, method="highs")
        if alt.status != 0 or np.max(np.abs(alt.x - alpha)) > agree_tol:
            agree = False
    return OrderingFit(tuple(map(float, alpha)), margin, agree, n_checks)


def weights_from_json(obj) -> WeightVector:
    """Accept a six-number list, ``{"alpha": [...]}``, or a mapping keyed M..E."""
    if isinstance(obj, dict) and "alpha" in obj:
        obj = obj["alpha"]
    if isinstance(obj, dict):
        return WeightVector.from_mapping(obj)
    if isinstance(obj, list):
        return WeightVector.from_sequence(obj)
    raise DomainError(f"weights must be a list or an object keyed {', '.join(COMPONENTS)}")
