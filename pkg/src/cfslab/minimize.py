"""Constrained minimization of the causal action over small discrete measures.

The optimizer is derivative-free at its core: simulated annealing over the
family parameters with constraint projection after every proposal, followed
by a finite-difference projected-descent polish.  The action is non-smooth
(absolute values of product eigenvalues), so the polish skips directions
where one-sided derivatives disagree.  The boundedness bound C acts as a
reject filter, not a penalty.

The iterate log marks a row as accepted when the proposal became the new
incumbent best, so the accepted objective values are non-increasing by
construction while the annealing walk underneath may still move uphill.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InfeasibleTrace
from .measure import (
    DiscreteMeasure,
    action_functionals,
    total_volume,
    trace_integral,
)
from .opspace import OperatorPoint

PROJECTION_TOL = 1e-10


@dataclass(frozen=True)
class Family:
    """Parameterized family of raw measures, projected before evaluation."""

    name: str
    lower: np.ndarray
    upper: np.ndarray
    build: callable
    description: str = ""

    @property
    def n_params(self) -> int:
        return len(self.lower)

    def clip(self, params: np.ndarray) -> np.ndarray:
        return np.clip(params, self.lower, self.upper)

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)


def _basis_vector(dim, index):
    e = np.zeros((dim, 1), dtype=complex)
    e[index, 0] = 1.0
    return e


def _single_atom_split(params):
    # One rank-2 atom on C^2 with spectrum (1 + u, 1 - u); the trace
    # projection turns the split u into the only shape degree of freedom.
    (u,) = params
    factors = np.eye(2, dtype=complex)
    atom = OperatorPoint(factors, np.array([1.0 + u, 1.0 - u]), n=2)
    return DiscreteMeasure([atom], np.array([1.0]))


def _two_atom_mixture(params):
    # Two positive rank-1 atoms on C^2 at relative angle theta, with raw
    # weight and spectrum asymmetries exp(bw), exp(ba).
    theta, log_w, log_a = params
    direction = np.array([[np.cos(theta)], [np.sin(theta)]], dtype=complex)
    first = OperatorPoint(_basis_vector(2, 0), np.array([np.exp(log_a)]), n=1)
    second = OperatorPoint(direction, np.array([1.0]), n=1)
    return DiscreteMeasure([first, second], np.array([np.exp(log_w), 1.0]))


FAMILIES = {
    "single_atom_split": Family(
        name="single_atom_split",
        lower=np.array([-0.95]),
        upper=np.array([0.95]),
        build=_single_atom_split,
        description="one rank-2 atom, spectrum (1+u, 1-u), n=2",
    ),
    "two_atom_mixture": Family(
        name="two_atom_mixture",
        lower=np.array([0.0, -2.0, -2.0]),
        upper=np.array([np.pi / 2.0, 2.0, 2.0]),
        build=_two_atom_mixture,
        description="two rank-1 atoms at angle theta with weight/spectrum asymmetry",
    ),
}


@dataclass(frozen=True)
class VariationalProblem:
    """A registered family plus the constraint targets and the RNG seed."""

    family: Family
    volume_target: float
    trace_target: float
    bound_c: float = None
    seed: int = 0
    initial_params: np.ndarray = None

    def start_params(self) -> np.ndarray:
        if self.initial_params is not None:
            return self.family.clip(np.asarray(self.initial_params, dtype=float))
        return self.family.center()


def project_constraints(
    rho: DiscreteMeasure, volume_target: float, trace_target: float
) -> DiscreteMeasure:
    """Rescale weights to the volume target, then spectra to the trace target.

    Weight scaling is linear in the volume and leaves tr(x) alone; the
    subsequent uniform spectral scaling is linear in the trace integral.
    Both constraints therefore hold exactly after one pass.  Idempotent.
    """
    if volume_target <= 0:
        raise ValueError(f"volume target must be positive, got {volume_target}")
    volume = total_volume(rho)
    scaled = rho.reweighted(volume_target / volume)
    trace = trace_integral(scaled)
    if trace == 0.0 and trace_target == 0.0:
        return scaled
    if trace == 0.0:
        raise InfeasibleTrace(
            f"trace integral is zero; cannot reach target {trace_target} by uniform scaling"
        )
    if trace_target == 0.0:
        raise InfeasibleTrace(
            "nonzero trace integral cannot be scaled uniformly to a zero target"
        )
    factor = trace_target / trace
    points = [
        OperatorPoint(p.factors, p.spectrum * factor, p.n, validate=False)
        for p in scaled.points
    ]
    return DiscreteMeasure(points, scaled.weights)


@dataclass(frozen=True)
class LogRow:
    iteration: int
    action: float
    boundedness: float
    volume: float
    trace: float
    accepted: bool


@dataclass(frozen=True)
class MinimizeResult:
    best_measure: DiscreteMeasure
    best_params: np.ndarray
    best_action: float
    best_boundedness: float
    log: tuple
    status: str  # "converged" | "budget_exhausted"
    evaluations: int


@dataclass
class _Evaluator:
    problem: VariationalProblem
    threads: object = None
    count: int = field(default=0)

    def __call__(self, params):
        self.count += 1
        raw = self.problem.family.build(params)
        projected = project_constraints(
            raw, self.problem.volume_target, self.problem.trace_target
        )
        action, boundedness = action_functionals(projected, threads=self.threads)
        return projected, action, boundedness

    def feasible(self, boundedness):
        return self.problem.bound_c is None or boundedness <= self.problem.bound_c


def minimize_action(
    problem: VariationalProblem, budget: int, threads=None
) -> MinimizeResult:
    """Minimize the action within a family under the constraint projections.

    ``budget`` bounds the number of objective evaluations.  Roughly 80% goes
    to the annealing walk and the remainder to the descent polish; runs that
    consume the full budget without the polish reaching its small-step
    criterion are flagged ``budget_exhausted`` and return the best so far.
    """
    if budget < 0:
        raise ValueError(f"budget must be nonnegative, got {budget}")
    family = problem.family
    rng = np.random.default_rng(problem.seed)
    evaluate = _Evaluator(problem, threads)

    params = family.start_params()
    measure, action, boundedness = evaluate(params)
    if not evaluate.feasible(boundedness):
        raise InfeasibleTrace(
            f"projected start violates the boundedness bound: T = {boundedness:.6g} > C"
        )
    log = [
        LogRow(0, action, boundedness, total_volume(measure), trace_integral(measure), True)
    ]
    best = (params.copy(), measure, action, boundedness)
    if budget == 0:
        return MinimizeResult(
            best[1], best[0], best[2], best[3], tuple(log), "budget_exhausted", 1
        )

    anneal_budget = int(0.8 * budget)
    current_params, current_action = params.copy(), action
    span = family.upper - family.lower
    temp0 = 0.1 * max(abs(action), 1.0)
    for it in range(1, anneal_budget + 1):
        frac = it / max(anneal_budget, 1)
        temp = temp0 * (0.01 ** frac)
        step = 0.5 * (0.02 ** frac) + 0.01
        proposal = family.clip(current_params + rng.normal(size=family.n_params) * step * span)
        cand_measure, cand_action, cand_bound = evaluate(proposal)
        feasible = evaluate.feasible(cand_bound)
        is_best = feasible and cand_action < best[2]
        if is_best:
            best = (proposal.copy(), cand_measure, cand_action, cand_bound)
        log.append(
            LogRow(
                it,
                cand_action,
                cand_bound,
                total_volume(cand_measure),
                trace_integral(cand_measure),
                is_best,
            )
        )
        if feasible and (
            cand_action <= current_action
            or rng.random() < np.exp(-(cand_action - current_action) / max(temp, 1e-300))
        ):
            current_params, current_action = proposal, cand_action

    status = "budget_exhausted"
    it = anneal_budget
    params = best[0].copy()
    step = 0.05
    while evaluate.count < budget:
        grad, usable = _projected_gradient(evaluate, family, params, budget)
        if grad is None:
            break
        norm = float(np.linalg.norm(grad))
        if norm < 1e-12 or not usable.any():
            status = "converged"
            break
        direction = -grad / norm
        improved = False
        while evaluate.count < budget and step > 1e-9:
            candidate = family.clip(params + step * direction * (family.upper - family.lower))
            if np.allclose(candidate, params):
                break
            cand_measure, cand_action, cand_bound = evaluate(candidate)
            it += 1
            is_best = evaluate.feasible(cand_bound) and cand_action < best[2]
            if is_best:
                best = (candidate.copy(), cand_measure, cand_action, cand_bound)
            log.append(
                LogRow(
                    it,
                    cand_action,
                    cand_bound,
                    total_volume(cand_measure),
                    trace_integral(cand_measure),
                    is_best,
                )
            )
            if is_best:
                params = candidate
                improved = True
                break
            step *= 0.5
        if not improved:
            if step <= 1e-9:
                status = "converged"
                break
            step *= 0.5
            if step <= 1e-9:
                status = "converged"
                break

    return MinimizeResult(
        best[1],
        best[0],
        best[2],
        best[3],
        tuple(log),
        status,
        evaluate.count,
    )


def _projected_gradient(evaluate, family, params, budget):
    """Central-difference gradient; coordinates near non-smooth points are zeroed.

    A coordinate counts as non-smooth when its one-sided derivatives disagree
    by more than 10% of their magnitude.
    """
    n = family.n_params
    if evaluate.count + 4 * n > budget:
        return None, None
    grad = np.zeros(n)
    usable = np.zeros(n, dtype=bool)
    _, f0, _ = evaluate(params)
    for k in range(n):
        h = 1e-6 * (1.0 + abs(params[k]))
        up = params.copy()
        up[k] = min(params[k] + h, family.upper[k])
        down = params.copy()
        down[k] = max(params[k] - h, family.lower[k])
        width = up[k] - down[k]
        if width <= 0:
            continue
        _, f_up, _ = evaluate(up)
        _, f_down, _ = evaluate(down)
        d_plus = (f_up - f0) / max(up[k] - params[k], 1e-300)
        d_minus = (f0 - f_down) / max(params[k] - down[k], 1e-300)
        scale = max(abs(d_plus), abs(d_minus), 1e-12)
        if abs(d_plus - d_minus) > 0.1 * scale:
            continue  # non-smooth point; leave this direction to the annealer
        grad[k] = (f_up - f_down) / width
        usable[k] = True
    return grad, usable


def problem_from_config(config: dict) -> tuple:
    """Build a (problem, budget) pair from a configuration mapping."""
    name = config.get("family")
    if name not in FAMILIES:
        raise ValueError(
            f"unknown family {name!r}; registered: {sorted(FAMILIES)}"
        )
    problem = VariationalProblem(
        family=FAMILIES[name],
        volume_target=float(config.get("volume_target", 2.0)),
        trace_target=float(config.get("trace_target", 2.0)),
        bound_c=(None if config.get("bound_C") is None else float(config["bound_C"])),
        seed=int(config.get("seed", 0)),
        initial_params=(
            None
            if config.get("initial_params") is None
            else np.asarray(config["initial_params"], dtype=float)
        ),
    )
    budget = int(config.get("budget", 2000))
    return problem, budget
