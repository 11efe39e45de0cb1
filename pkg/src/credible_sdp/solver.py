"""Short-step primal-dual interior-point SDP solver.

The iteration keeps a strictly feasible primal-dual pair (X, Z, p) inside a
narrow central-path neighborhood and shrinks the duality gap trace(X @ Z) by
a fixed factor ``sigma`` per step. Search directions come from a scaled
Newton system assembled with the symmetric square root of Z:

    Zh  = Z^(1/2),  Zhi = Zh^(-1)
    G   = krons(Zhi, Zh @ X)
    H   = krons(Zhi @ Z, Zh)
    r   = sigma * mu * I - Zh @ X @ Zh

and are obtained sequentially by minimum-norm least squares: dZ from the
dual-feasibility equations (zero right-hand side, hence dZ == 0 and the dual
iterate never moves), dX from H @ vecs(dX) = vecs(r) - G @ vecs(dZ), and dp
from the primal-feasibility equations. The full step (length 1) is always
taken.

Every iteration is checked against its runtime contracts by the ``monitor``
module; ``solve`` returns a report bundling the trajectory with the per-step
contract records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Callable, Iterator

import numpy as np

from .linalg import frob_norm, lsqr_solve, require_pd, sym_inv, sym_sqrt, trace_inner
from .problem import SdpProblem
from .symvec import krons, mats, require_symmetric, symmetrize, vecs

if TYPE_CHECKING:
    from .monitor import InvariantRecord

#: Default gap-contraction factor per iteration.
DEFAULT_SIGMA = 0.75

#: Default potential-function weight; for n = 2 it implies a contraction
#: factor of about 0.75 via ``sigma_from_nu``.
DEFAULT_NU = 0.4714

#: Default admission ceiling on the initial duality gap.
DEFAULT_GAP_CEILING = 0.1


class InitializationError(RuntimeError):
    """The starting point could not be built or violates its contracts."""

    def __init__(self, message: str, records: list | None = None):
        super().__init__(message)
        self.records = records if records is not None else []


class NeighborhoodViolation(InitializationError):
    """The starting pair lies outside the central-path neighborhood."""


class SolveStatus(str, Enum):
    CONVERGED = "Converged"
    DIVERGENCE_GUARD = "DivergenceGuard"
    ITERATION_CAP = "IterationCap"
    INVARIANT_VIOLATION = "InvariantViolation"


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for ``solve``.

    ``mode`` selects what happens when a per-iteration contract fails:
    "strict" aborts the run with status InvariantViolation, "audit" records
    the failure and keeps iterating. Initialization contracts are enforced in
    both modes.

    ``sigma_derived`` is informational: True when sigma was derived from the
    potential weight nu rather than given directly.
    """

    epsilon: float = 1e-8
    nu: float = DEFAULT_NU
    sigma: float = DEFAULT_SIGMA
    gap_ceiling: float = DEFAULT_GAP_CEILING
    mode: str = "audit"
    max_iterations: int | None = None
    equality_tol: float = 1e-9
    pd_margin: float = 1e-12
    lsqr_tol: float = 1e-9
    sigma_derived: bool = False


def validate_options(opts: SolverOptions) -> None:
    if opts.mode not in ("strict", "audit"):
        raise ValueError(f"mode must be 'strict' or 'audit', got {opts.mode!r}")
    if not (math.isfinite(opts.epsilon) and opts.epsilon > 0):
        raise ValueError(f"epsilon must be positive, got {opts.epsilon}")
    if not (math.isfinite(opts.sigma) and 0 < opts.sigma < 1):
        raise ValueError(f"sigma must lie strictly between 0 and 1, got {opts.sigma}")
    if not (math.isfinite(opts.nu) and opts.nu > 0):
        raise ValueError(f"nu must be positive, got {opts.nu}")
    if not (math.isfinite(opts.gap_ceiling) and opts.gap_ceiling > 0):
        raise ValueError(f"gap ceiling must be positive, got {opts.gap_ceiling}")
    if opts.equality_tol <= 0 or opts.lsqr_tol <= 0:
        raise ValueError("tolerances must be positive")
    if opts.pd_margin < 0:
        raise ValueError("pd margin must be nonnegative")
    if opts.max_iterations is not None and opts.max_iterations < 1:
        raise ValueError(f"max_iterations must be at least 1, got {opts.max_iterations}")


def default_options(prob: SdpProblem) -> SolverOptions:
    """Options with the problem file's epsilon and nu filled in."""
    return SolverOptions(
        epsilon=prob.epsilon,
        nu=prob.nu if prob.nu is not None else DEFAULT_NU,
    )


def sigma_from_nu(n: int, nu: float) -> float:
    """Contraction factor implied by potential weight nu: n / (n + nu * sqrt(n))."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if not (math.isfinite(nu) and nu > 0):
        raise ValueError(f"nu must be positive, got {nu}")
    return n / (n + nu * math.sqrt(n))


def iteration_bound(initial_gap: float, epsilon: float, sigma: float) -> int:
    """Iterations guaranteed to reach gap <= epsilon under exact contraction.

    ceil(log(initial_gap / epsilon) / log(1 / sigma)); 0 when already there.
    """
    if initial_gap <= epsilon:
        return 0
    return math.ceil(math.log(initial_gap / epsilon) / math.log(1.0 / sigma))


@dataclass(frozen=True)
class IterateState:
    """One point on the trajectory, together with its predecessor.

    (X, Z, p) is the pair after ``iteration`` steps; (Xm, Zm, pm) the pair one
    step earlier (equal to (X, Z, p) at iteration 0). ``phi`` and ``phim`` are
    the corresponding duality gaps and ``mu = phi / n``. At iteration 0,
    ``phim`` is seeded to ``phi / sigma`` so the contraction contract holds
    vacuously for the starting point.
    """

    X: np.ndarray
    Z: np.ndarray
    p: np.ndarray
    Xm: np.ndarray
    Zm: np.ndarray
    pm: np.ndarray
    mu: float
    phi: float
    phim: float
    iteration: int


@dataclass
class NewtonStep:
    """Scaled Newton system and its minimum-norm solution.

    ``mu`` and ``sigma`` are the values used to build the right-hand side
    (mu is the gap of the point being stepped FROM, divided by n). G, H, r
    are kept for inspection; contract checking never reads them, so a step
    reconstructed from a trace may leave them as None.
    """

    dX: np.ndarray
    dZ: np.ndarray
    dp: np.ndarray
    Zh: np.ndarray
    Zhi: np.ndarray
    mu: float
    sigma: float
    G: np.ndarray | None = None
    H: np.ndarray | None = None
    r: np.ndarray | None = None


def _lsqr(A: np.ndarray, b: np.ndarray, equation: str, base_tol: float) -> np.ndarray:
    return lsqr_solve(
        A,
        b,
        equation=equation,
        tol=base_tol * max(1.0, float(np.linalg.norm(np.asarray(b, dtype=float).ravel()))),
    )


def assemble_newton(prob: SdpProblem, state: IterateState, sigma: float) -> NewtonStep:
    """Build the scaled Newton system at ``state`` (directions left empty)."""
    n = prob.n
    mu = state.phi / n
    Zh = sym_sqrt(state.Z)
    Zhi = sym_inv(Zh)
    G = krons(Zhi, Zh @ state.X, n)
    H = krons(Zhi @ state.Z, Zh, n)
    r = symmetrize(sigma * mu * np.eye(n) - Zh @ state.X @ Zh)
    return NewtonStep(
        dX=np.zeros((n, n)),
        dZ=np.zeros((n, n)),
        dp=np.zeros(prob.m),
        Zh=Zh,
        Zhi=Zhi,
        mu=mu,
        sigma=sigma,
        G=G,
        H=H,
        r=r,
    )


def solve_newton(prob: SdpProblem, step: NewtonStep, lsqr_tol: float) -> NewtonStep:
    """Fill in (dZ, dX, dp) by sequential minimum-norm least squares."""
    dZ_vec = _lsqr(prob.fmat, np.zeros(prob.m), "newton-dZ", lsqr_tol)
    dX_vec = _lsqr(step.H, vecs(step.r) - step.G @ dZ_vec, "newton-dX", lsqr_tol)
    dp = _lsqr(prob.fmat.T, -dX_vec, "newton-dp", lsqr_tol)
    step.dZ = mats(dZ_vec, prob.n)
    step.dX = mats(dX_vec, prob.n)
    step.dp = dp
    return step


def take_step(prob: SdpProblem, state: IterateState, step: NewtonStep) -> IterateState:
    """Advance by the full Newton step and recompute gaps."""
    X = state.X + step.dX
    Z = state.Z + step.dZ
    p = state.p + step.dp
    phim = trace_inner(state.X, state.Z)
    phi = trace_inner(X, Z)
    return IterateState(
        X=X,
        Z=Z,
        p=p,
        Xm=state.X,
        Zm=state.Z,
        pm=state.p,
        mu=phi / prob.n,
        phi=phi,
        phim=phim,
        iteration=state.iteration + 1,
    )


def initialize(
    prob: SdpProblem,
    opts: SolverOptions,
    X0: np.ndarray | None = None,
) -> tuple[IterateState, list["InvariantRecord"]]:
    """Construct and certify the starting point.

    Z solves the dual-feasibility equations by minimum-norm least squares
    (and stays fixed thereafter); X comes from the explicit warm start
    (argument wins over the problem file); p solves the primal-feasibility
    equations for that X. Checks run in order: positive definiteness of Z and
    X, then the central-path neighborhood gate (NeighborhoodViolation), then
    the full initialization contract sweep (InitializationError naming the
    failed record ids). All of this is enforced in both modes.
    """
    from . import monitor

    n = prob.n
    z_vec = _lsqr(prob.fmat, -prob.b, "initial dual solve", opts.lsqr_tol)
    Z = mats(z_vec, n)
    require_pd(Z, what="initial dual iterate Z", tol=opts.pd_margin)

    if X0 is None:
        X0 = prob.x0
    if X0 is None:
        raise InitializationError(
            "no primal warm start: pass X0 or include one in the problem file"
        )
    X = require_symmetric(np.array(X0, dtype=float), what="X0")
    if X.shape != (n, n):
        raise InitializationError(f"X0 has shape {X.shape}, expected {(n, n)}")
    require_pd(X, what="initial primal iterate X", tol=opts.pd_margin)

    p = _lsqr(prob.fmat.T, -vecs(symmetrize(prob.f0 + X)), "initial primal solve", opts.lsqr_tol)

    phi = trace_inner(X, Z)
    mu = phi / n
    state = IterateState(
        X=X,
        Z=Z,
        p=p,
        Xm=X,
        Zm=Z,
        pm=p,
        mu=mu,
        phi=phi,
        phim=phi / opts.sigma,
        iteration=0,
    )

    deviation = frob_norm(X @ Z - mu * np.eye(n))
    if deviation > monitor.THETA * mu:
        raise NeighborhoodViolation(
            "starting pair lies outside the central-path neighborhood: "
            f"||X @ Z - mu*I||_F = {deviation:.6e} > {monitor.THETA} * mu = "
            f"{monitor.THETA * mu:.6e}"
        )

    records = monitor.check_initialization(prob, state, opts)
    failed = [rec.id for rec in records if not rec.passed]
    if failed:
        raise InitializationError(
            "starting point violates initialization contracts: " + ", ".join(failed),
            records=records,
        )
    return state, records


@dataclass
class IterationSnapshot:
    """State after one step, the step that produced it, and its contract records."""

    state: IterateState
    step: NewtonStep
    records: list["InvariantRecord"]


@dataclass
class SolveReport:
    """Full account of one solver run."""

    problem: SdpProblem
    options: SolverOptions
    sigma: float
    sigma_derived: bool
    status: SolveStatus
    iterations: int
    initial_state: IterateState
    final_state: IterateState
    final_gap: float
    budget: int
    init_records: list["InvariantRecord"]
    snapshots: list[IterationSnapshot]
    violation_id: str | None = None

    @property
    def clean(self) -> bool:
        """True when every contract record, initialization included, passed."""
        return all(rec.passed for rec in self.all_records())

    def all_records(self) -> Iterator["InvariantRecord"]:
        yield from self.init_records
        for snap in self.snapshots:
            yield from snap.records

    def min_slacks(self) -> dict[str, float]:
        """Per record id, the smallest observed margin (bound - measured)."""
        out: dict[str, float] = {}
        for rec in self.all_records():
            slack = rec.bound - rec.measured
            if rec.id not in out or slack < out[rec.id]:
                out[rec.id] = slack
        return out

    def min_potential_drop(self, nu: float | None = None) -> float:
        """Smallest per-iteration decrease of the weighted potential."""
        weight = self.options.nu if nu is None else nu
        pot = lambda s: self.problem.potential_tanabe(s.X, s.Z, weight)  # noqa: E731
        drops = []
        prev = self.initial_state
        for snap in self.snapshots:
            drops.append(pot(prev) - pot(snap.state))
            prev = snap.state
        return min(drops) if drops else math.inf


def solve(
    prob: SdpProblem,
    options: SolverOptions | None = None,
    X0: np.ndarray | None = None,
    *,
    hook: Callable[[IterationSnapshot], None] | None = None,
) -> SolveReport:
    """Run the short-step iteration to convergence or abort.

    Iterates while the duality gap exceeds epsilon, subject to three guards:
    an iteration cap (``max_iterations``, default ten times the certified
    budget), a strict-mode abort on the first failed contract record, and a
    divergence guard that stops if the gap ever increases. ``hook``, when
    given, is called with each IterationSnapshot as it is produced.
    """
    from . import monitor

    opts = options if options is not None else default_options(prob)
    validate_options(opts)

    state, init_records = initialize(prob, opts, X0=X0)
    initial_state = state
    budget = iteration_bound(state.phi, opts.epsilon, opts.sigma)
    cap = opts.max_iterations if opts.max_iterations is not None else max(10, 10 * budget)

    snapshots: list[IterationSnapshot] = []
    status = SolveStatus.CONVERGED
    violation_id: str | None = None

    while state.phi > opts.epsilon:
        if len(snapshots) >= cap:
            status = SolveStatus.ITERATION_CAP
            break
        step = assemble_newton(prob, state, opts.sigma)
        step = solve_newton(prob, step, opts.lsqr_tol)
        new_state = take_step(prob, state, step)
        records = monitor.check_iteration(prob, new_state, step, opts)
        snapshot = IterationSnapshot(state=new_state, step=step, records=records)
        if hook is not None:
            hook(snapshot)
        snapshots.append(snapshot)
        state = new_state
        if opts.mode == "strict":
            bad = next((rec for rec in records if not rec.passed), None)
            if bad is not None:
                status = SolveStatus.INVARIANT_VIOLATION
                violation_id = bad.id
                break
        if new_state.phi - new_state.phim > 0:
            status = SolveStatus.DIVERGENCE_GUARD
            break

    return SolveReport(
        problem=prob,
        options=opts,
        sigma=opts.sigma,
        sigma_derived=opts.sigma_derived,
        status=status,
        iterations=len(snapshots),
        initial_state=initial_state,
        final_state=state,
        final_gap=state.phi,
        budget=budget,
        init_records=init_records,
        snapshots=snapshots,
        violation_id=violation_id,
    )
