"""Budgeted derivative-free trust-region minimizer.

Solves ``min J(p) s.t. g(p) <= 0, pmin <= p <= pmax`` using only
evaluations of the pair ``(J, g)``. Each round samples the incumbent's
coordinate stencil ``p +/- alpha_i e_i`` (clipped to the box), fits a
univariate quadratic to ``J`` and to ``g`` along every coordinate, and tries
the composite point made of the coordinate-wise model minimizers. The radii
grow by ``beta_plus`` after a successful round and shrink by ``beta_minus``
otherwise. Points are ranked feasibility first (see :func:`merit_better`).
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

EvalFn = Callable[[np.ndarray], "tuple[float, float]"]


@dataclass(frozen=True)
class TrustRegionConfig:
    beta_plus: float = 2.0
    beta_minus: float = 0.5
    alpha_min: "float | np.ndarray" = 1e-9
    alpha0_fraction: float = 0.1

    def __post_init__(self):
        if not self.beta_plus > 1:
            raise ValueError(f"beta_plus must be > 1, got {self.beta_plus}")
        if not 0 < self.beta_minus < 1:
            raise ValueError(f"beta_minus must lie in (0, 1), got {self.beta_minus}")
        if np.any(np.asarray(self.alpha_min) <= 0):
            raise ValueError("alpha_min must be > 0")
        if not self.alpha0_fraction > 0:
            raise ValueError("alpha0_fraction must be > 0")

    def alpha_min_vector(self, n: int) -> np.ndarray:
        amin = np.asarray(self.alpha_min, dtype=float)
        if amin.ndim == 0:
            return np.full(n, float(amin))
        if amin.shape != (n,):
            raise ValueError(f"alpha_min has length {amin.size}, expected {n}")
        return amin


def update_trust_region_parameters(
    cfg: TrustRegionConfig,
    b_plus: float,
    b_minus: float,
    alpha_min=None,
    n_p: Optional[int] = None,
) -> TrustRegionConfig:
    """Return ``cfg`` with new expansion/contraction factors.

    ``alpha_min`` may be a scalar (applied to every component) or a vector of
    length ``n_p``; any other length is an error.
    """
    if alpha_min is None:
        return replace(cfg, beta_plus=float(b_plus), beta_minus=float(b_minus))
    amin = np.asarray(alpha_min, dtype=float)
    if amin.ndim == 0 or amin.size == 1:
        amin = float(amin.ravel()[0])
    else:
        if n_p is None:
            current = np.asarray(cfg.alpha_min)
            n_p = current.size if current.ndim else None
        if n_p is None or amin.ndim != 1 or amin.size != n_p:
            raise ValueError(
                f"alpha_min must be a scalar or a vector of length np={n_p}, "
                f"got shape {amin.shape}"
            )
    return replace(cfg, beta_plus=float(b_plus), beta_minus=float(b_minus), alpha_min=amin)


@dataclass(frozen=True)
class Evaluation:
    p: np.ndarray
    J: float
    g: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.J) and math.isfinite(self.g)

    @property
    def feasible(self) -> bool:
        return self.finite and self.g <= 0


def merit_better(a: Evaluation, b: Evaluation) -> bool:
    """True iff ``a`` is strictly better than ``b``.

    Non-finite loses to finite; a feasible point beats an infeasible one;
    two infeasible points compare by ``g``, two feasible points by ``J``.
    Ties return False so the incumbent is kept.
    """
    if not a.finite:
        return False
    if not b.finite:
        return True
    fa, fb = a.g <= 0, b.g <= 0
    if fa != fb:
        return fa
    if not fa:
        return a.g < b.g
    return a.J < b.J


@dataclass
class TraceRecord:
    n_eval: int
    p: np.ndarray
    J: float
    g: float
    accepted: bool = False


@dataclass
class SolverState:
    p_best: np.ndarray
    J_best: float
    g_best: float
    alpha: np.ndarray
    n_eval: int
    history: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    rounds: int = 0


def _quad_coeffs(f0, left, right):
    """Coefficients ``(b, c)`` of ``f0 + b s + c s^2`` through the samples.

    ``left``/``right`` are ``(offset, value)`` or None.
    """
    if left is not None and right is not None:
        a, fl = -left[0], left[1]
        r, fr = right
        c = (r * (fl - f0) + a * (fr - f0)) / (a * r * (a + r))
        b = ((fr - f0) - c * r * r) / r
        return b, c
    if right is not None:
        return (right[1] - f0) / right[0], 0.0
    if left is not None:
        return (left[1] - f0) / left[0], 0.0
    return 0.0, 0.0


def _roots(f0, b, c):
    if c == 0.0:
        return [-f0 / b] if b != 0.0 else []
    disc = b * b - 4.0 * c * f0
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    return [(-b - sq) / (2 * c), (-b + sq) / (2 * c)]


def _coordinate_step(lo, hi, left, right, inc: Evaluation, use_cost: bool) -> float:
    """Offset minimizing the active coordinate model over ``[lo, hi]``.

    Infeasible incumbent: minimize the constraint model. Feasible incumbent:
    minimize the cost model over the part of the interval where the
    constraint model is nonpositive.
    """
    g0, J0 = inc.g, inc.J
    gl = None if left is None else (left[0], left[1].g)
    gr = None if right is None else (right[0], right[1].g)
    gb, gc = _quad_coeffs(g0, gl, gr)

    if not use_cost:
        f0, fb, fc = g0, gb, gc
        cands = [lo, hi]
    else:
        jl = None if left is None else (left[0], left[1].J)
        jr = None if right is None else (right[0], right[1].J)
        f0 = J0
        fb, fc = _quad_coeffs(J0, jl, jr)
        cands = [lo, hi] + _roots(g0, gb, gc)
    if fc > 0:
        cands.append(-fb / (2 * fc))

    best_s, best_v = 0.0, f0
    for s in cands:
        if not lo <= s <= hi or s == 0.0:
            continue
        if use_cost:
            gs = g0 + gb * s + gc * s * s
            if gs > 1e-12 * (abs(g0) + abs(gb * s) + abs(gc * s * s)):
                continue
        v = f0 + fb * s + fc * s * s
        if v < best_v or (v == best_v and abs(s) < abs(best_s)):
            best_s, best_v = s, v
    return best_s


def solve(
    eval_fn: EvalFn,
    p_init,
    pmin,
    pmax,
    Nev: int,
    cfg: Optional[TrustRegionConfig] = None,
    subset: Optional[Sequence[int]] = None,
    trace: bool = False,
) -> SolverState:
    """Minimize ``J`` subject to ``g <= 0`` within the box using at most ``Nev`` evaluations.

    Parameters
    ----------
    eval_fn : callable
        ``p -> (J, g)``. Non-finite outputs are ranked below every finite
        evaluation.
    p_init, pmin, pmax : array_like
        Start point and box; ``pmin <= p_init <= pmax`` is required.
    Nev : int
        Evaluation budget (each call of ``eval_fn`` counts as one).
    cfg : TrustRegionConfig, optional
    subset : sequence of int, optional
        0-based components to optimize; the others stay at ``p_init``.
    trace : bool
        Record every evaluation in ``state.trace``.
    """
    cfg = cfg or TrustRegionConfig()
    pmin = np.asarray(pmin, dtype=float).ravel()
    pmax = np.asarray(pmax, dtype=float).ravel()
    p = np.asarray(p_init, dtype=float).ravel().copy()
    n = p.size
    if pmin.size != n or pmax.size != n:
        raise ValueError("p_init, pmin and pmax must have the same length")
    if np.any(p < pmin) or np.any(p > pmax):
        raise ValueError("p_init must lie within [pmin, pmax]")
    if Nev < 1:
        raise ValueError("Nev must be >= 1")
    idx = list(range(n)) if subset is None else sorted({int(i) for i in subset})
    if any(i < 0 or i >= n for i in idx):
        raise ValueError(f"subset indices must lie within [0, {n - 1}]")

    width = pmax - pmin
    alpha = cfg.alpha0_fraction * width
    amin = cfg.alpha_min_vector(n)

    records: list[TraceRecord] = []
    n_eval = 0

    def evaluate(q: np.ndarray) -> Evaluation:
        nonlocal n_eval
        J, g = eval_fn(q.copy())
        n_eval += 1
        ev = Evaluation(q, float(J), float(g))
        if trace:
            records.append(TraceRecord(n_eval, q.copy(), ev.J, ev.g))
        return ev

    def mark(k: int) -> None:
        if trace:
            records[k - 1].accepted = True

    inc = evaluate(p.copy())
    inc_id = n_eval
    mark(inc_id)
    state = SolverState(p.copy(), inc.J, inc.g, alpha, n_eval)
    history = [(n_eval, inc.J, inc.g)]
    rounds = 0

    while n_eval < Nev:
        active = [i for i in idx if alpha[i] >= amin[i]]
        if not active:
            break
        rounds += 1
        pts: list[tuple[Evaluation, int]] = []
        stencil: dict[int, tuple] = {}
        exhausted = False
        for i in active:
            lo = max(pmin[i], p[i] - alpha[i])
            hi = min(pmax[i], p[i] + alpha[i])
            sides = []
            for val in (lo, hi):
                if val == p[i]:
                    sides.append(None)
                    continue
                if n_eval >= Nev:
                    exhausted = True
                    break
                q = p.copy()
                q[i] = val
                ev = evaluate(q)
                pts.append((ev, n_eval))
                sides.append((val - p[i], ev) if ev.finite else None)
            if exhausted:
                break
            stencil[i] = (lo - p[i], hi - p[i], sides[0], sides[1])

        cand_id = None
        cand = None
        if not exhausted and inc.finite and n_eval < Nev:
            step = np.zeros(n)
            use_cost = inc.g <= 0
            for i, (lo, hi, left, right) in stencil.items():
                step[i] = _coordinate_step(lo, hi, left, right, inc, use_cost)
            if np.any(step != 0.0):
                q = np.clip(p + step, pmin, pmax)
                cand = evaluate(q)
                cand_id = n_eval
                pts.append((cand, cand_id))

        success = cand is not None and merit_better(cand, inc)
        new_inc, new_id = inc, inc_id
        for ev, k in pts:
            if merit_better(ev, new_inc):
                new_inc, new_id = ev, k
        if new_id != inc_id:
            inc, inc_id = new_inc, new_id
            p = inc.p.copy()
            mark(inc_id)

        if success:
            alpha[idx] = np.minimum(cfg.beta_plus * alpha[idx], width[idx])
        else:
            alpha[idx] = cfg.beta_minus * alpha[idx]
        history.append((n_eval, inc.J, inc.g))
        if exhausted:
            break

    state.p_best = p
    state.J_best = inc.J
    state.g_best = inc.g
    state.alpha = alpha
    state.n_eval = n_eval
    state.history = history
    state.trace = records
    state.rounds = rounds
    return state


def estimate_teval(eval_fn: EvalFn, p_init, K: int = 100) -> float:
    """Mean wall-clock seconds of one ``(J, g)`` evaluation over ``K`` calls.

    A budget for a control period ``T`` is then roughly ``T / teval``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    p = np.asarray(p_init, dtype=float).ravel()
    t0 = time.perf_counter()
    for _ in range(K):
        eval_fn(p.copy())
    return (time.perf_counter() - t0) / K


def write_trace_csv(path, records: Sequence[TraceRecord]) -> None:
    """One row per evaluation: ``n_eval, p1..pn, J, g, accepted``."""
    n = records[0].p.size if records else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_eval", *[f"p{k + 1}" for k in range(n)], "J", "g", "accepted"])
        for r in records:
            writer.writerow([r.n_eval, *map(repr, r.p.tolist()), repr(r.J), repr(r.g), int(r.accepted)])
