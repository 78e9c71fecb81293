"""Worst-case criteria over a box of uncertain parameters.

Direct maximization by multi-start derivative-free search: every corner
of the box is evaluated when there are few enough (2^d <= 1024), then
Nelder-Mead with projection onto the box polishes the best corners plus
Latin-hypercube starts.  The best value found is a certified lower
bound on the true worst case; the reported upper bound inflates it by
the largest relative improvement observed in the final polish
iterations (a stagnation gap) and is labeled heuristic, not a
certificate.

An unstable model inside the box scores +inf, so a robust-stability
violation surfaces as the search optimum instead of being skipped; the
offending point is reported and the worst case is unbounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ModelError, NumericalError, RobustStabilityError, UnstableSystemError
from .linsys import StateSpaceModel, dc_gain, frequency_response, h2_norm, hinf_norm, is_stable
from .spacecraft import UncertainParameter

ModelFamily = Callable[[Mapping[str, float]], StateSpaceModel]

CORNER_ENUMERATION_LIMIT = 1024


@dataclass(frozen=True)
class WcResult:
    criterion: str
    lower_bound: float
    upper_bound: float
    config: dict[str, float]
    evaluations: int
    converged: bool
    nominal_value: float
    stagnation_gap: float
    upper_bound_certified: bool = False  # heuristic gap, never a certificate

    def __post_init__(self):
        if self.lower_bound > self.upper_bound + 1e-12:
            raise ModelError("worst-case lower bound exceeds upper bound")


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self) -> bool:
        if self.used >= self.limit:
            return False
        self.used += 1
        return True


def _objective_wrapper(family: ModelFamily, names: Sequence[str],
                       evaluate: Callable[[StateSpaceModel], float],
                       budget: _Budget, require_stable: bool):
    def f(x: np.ndarray) -> float:
        if not budget.spend():
            raise _BudgetExhausted()
        point = {n: float(v) for n, v in zip(names, x)}
        model = family(point)
        if require_stable and not is_stable(model):
            raise RobustStabilityError(
                "unstable model inside the uncertainty box; worst case unbounded",
                point=point,
            )
        try:
            return evaluate(model)
        except UnstableSystemError as exc:
            raise RobustStabilityError(
                "unstable model inside the uncertainty box; worst case unbounded",
                point=point,
            ) from exc
    return f


class _BudgetExhausted(Exception):
    pass


def _nelder_mead_box(f, x0: np.ndarray, lower: np.ndarray, upper: np.ndarray,
                     max_iter: int = 200, init_scale: float = 0.15,
                     ftol: float = 1e-10):
    """Maximize f over the box; returns (x, value, last_generation_gain)."""
    span = upper - lower
    dim = x0.size

    def clip(x):
        return np.minimum(np.maximum(x, lower), upper)

    simplex = [clip(x0)]
    for i in range(dim):
        step = np.zeros(dim)
        step[i] = init_scale * span[i] if span[i] > 0 else 0.0
        candidate = clip(x0 + step)
        if np.allclose(candidate, simplex[0]):
            candidate = clip(x0 - step)
        simplex.append(candidate)
    try:
        values = [f(x) for x in simplex]
    except _BudgetExhausted:
        return simplex[0], -math.inf, 0.0

    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    last_gain = 0.0
    try:
        for _ in range(max_iter):
            order = sorted(range(len(simplex)), key=lambda i: (-values[i], tuple(simplex[i])))
            simplex = [simplex[i] for i in order]
            values = [values[i] for i in order]
            best_before = values[0]

            centroid = np.mean(simplex[:-1], axis=0)
            worst = simplex[-1]
            reflected = clip(centroid + alpha * (centroid - worst))
            fr = f(reflected)
            if fr > values[0]:
                expanded = clip(centroid + gamma * (reflected - centroid))
                fe = f(expanded)
                if fe > fr:
                    simplex[-1], values[-1] = expanded, fe
                else:
                    simplex[-1], values[-1] = reflected, fr
            elif fr > values[-2]:
                simplex[-1], values[-1] = reflected, fr
            else:
                contracted = clip(centroid + rho * (worst - centroid))
                fc = f(contracted)
                if fc > values[-1]:
                    simplex[-1], values[-1] = contracted, fc
                else:
                    best = simplex[0]
                    for i in range(1, len(simplex)):
                        simplex[i] = clip(best + sigma * (simplex[i] - best))
                        values[i] = f(simplex[i])
            best_after = max(values)
            last_gain = max(best_after - best_before, 0.0)
            spread = max(values) - min(values)
            if spread < ftol * max(abs(max(values)), 1.0):
                break
    except _BudgetExhausted:
        pass
    k = int(np.argmax(values))
    return simplex[k], values[k], last_gain


def _latin_hypercube(rng: np.random.Generator, n: int, lower: np.ndarray,
                     upper: np.ndarray) -> np.ndarray:
    dim = lower.size
    u = (rng.permuted(np.tile(np.arange(n), (dim, 1)), axis=1).T + rng.uniform(size=(n, dim))) / n
    return lower + u * (upper - lower)


def _search(family: ModelFamily, box: Sequence[UncertainParameter],
            evaluate: Callable[[StateSpaceModel], float], criterion: str,
            budget: int, seed: int, starts: int = 16,
            require_stable: bool = True) -> WcResult:
    names = [p.name for p in box]
    lower = np.array([p.lower for p in box])
    upper = np.array([p.upper for p in box])
    nominal_x = np.array([p.nominal for p in box])

    tracker = _Budget(max(budget, 1))
    f = _objective_wrapper(family, names, evaluate, tracker, require_stable)

    nominal_value = f(nominal_x)
    best_x, best_val = nominal_x, nominal_value

    def consider(x, val):
        nonlocal best_x, best_val
        if val > best_val or (val == best_val and tuple(x) < tuple(best_x)):
            best_x, best_val = np.array(x), val

    if not box:
        return WcResult(criterion=criterion, lower_bound=nominal_value,
                        upper_bound=nominal_value, config={}, evaluations=tracker.used,
                        converged=True, nominal_value=nominal_value, stagnation_gap=0.0)

    dim = len(box)
    corner_points: list[np.ndarray] = []
    if 2 ** dim <= CORNER_ENUMERATION_LIMIT:
        grids = np.meshgrid(*[(lo, hi) for lo, hi in zip(lower, upper)], indexing="ij")
        corners = np.stack([g.ravel() for g in grids], axis=1)
        corner_vals = []
        try:
            for x in corners:
                val = f(x)
                corner_vals.append(val)
                consider(x, val)
        except _BudgetExhausted:
            corner_vals = corner_vals or [nominal_value]
        order = np.argsort(corner_vals)[::-1]
        corner_points = [corners[i] for i in order[: max(starts // 2, 1)]]

    rng = np.random.Generator(np.random.PCG64(seed))
    n_lhs = max(starts - len(corner_points) - 1, 0)
    lhs = _latin_hypercube(rng, n_lhs, lower, upper) if n_lhs else np.zeros((0, dim))
    start_points = [np.array(best_x), *corner_points, *lhs]

    gains = []
    for x0 in start_points[:starts]:
        x, val, gain = _nelder_mead_box(f, x0, lower, upper)
        if np.isfinite(val):
            consider(x, val)
            gains.append(gain)
        if tracker.used >= tracker.limit:
            break

    if math.isinf(best_val):
        raise RobustStabilityError(
            "unstable model inside the uncertainty box; worst case unbounded",
            point={n: float(v) for n, v in zip(names, best_x)},
        )

    stagnation = max(gains) / max(abs(best_val), 1e-30) if gains else 0.0
    converged = best_val >= nominal_value - 1e-12 * max(abs(nominal_value), 1.0)
    return WcResult(
        criterion=criterion,
        lower_bound=best_val,
        upper_bound=best_val * (1.0 + stagnation) if best_val >= 0 else best_val,
        config={n: float(v) for n, v in zip(names, best_x)},
        evaluations=tracker.used,
        converged=converged,
        nominal_value=nominal_value,
        stagnation_gap=stagnation,
    )


def wc_variance(family: ModelFamily, box: Sequence[UncertainParameter],
                budget: int = 4000, seed: int = 0, starts: int = 16) -> WcResult:
    """Worst-case H2 norm (output standard deviation) over the box."""
    return _search(family, box, h2_norm, "variance", budget, seed, starts)


def wc_gain(family: ModelFamily, box: Sequence[UncertainParameter],
            budget: int = 4000, seed: int = 0, starts: int = 16,
            at_frequency_hz: float | None = None) -> WcResult:
    """Worst-case peak gain over the box.

    With ``at_frequency_hz`` the gain is evaluated at that single
    frequency (the relevant bound for a sinusoidal disturbance of known
    frequency); otherwise the full peak gain is maximized.
    """
    if at_frequency_hz is None:
        evaluate = lambda g: hinf_norm(g, rel_tol=1e-5)
    else:
        freq = np.array([at_frequency_hz])

        def evaluate(g: StateSpaceModel) -> float:
            if not is_stable(g):
                raise UnstableSystemError("unstable", eigenvalues=g.poles())
            resp = frequency_response(g, freq)[0]
            return float(np.linalg.norm(resp, 2))

    return _search(family, box, evaluate, "gain", budget, seed, starts)


def wc_dc_gain(family: ModelFamily, box: Sequence[UncertainParameter],
               budget: int = 4000, seed: int = 0, starts: int = 16) -> WcResult:
    """Worst-case steady-state gain (largest singular value) over the box."""
    def evaluate(g: StateSpaceModel) -> float:
        try:
            return float(np.linalg.norm(dc_gain(g), 2))
        except NumericalError as exc:
            raise RobustStabilityError(
                "pole at the origin inside the uncertainty box", point=None
            ) from exc

    return _search(family, box, evaluate, "dc_gain", budget, seed, starts,
                   require_stable=False)
