"""Random strictly feasible problem instances for exercising the solver.

The construction plants the dual solution: with m = n(n+1)/2 linearly
independent symmetric constraint matrices, the minimum-norm dual solve has a
unique solution, so choosing b = -fmat @ vecs(Z) makes the solver recover the
planted positive definite Z exactly. The primal warm start is placed on (or
optionally nudged slightly off) the central path, comfortably inside the
neighborhood and under the gap ceiling, so every initialization contract
holds by construction.
"""

from __future__ import annotations

import numpy as np

from credible_sdp import build_problem
from credible_sdp.linalg import min_eigenvalue, sym_inv, trace_inner
from credible_sdp.symvec import sym_dim, symmetrize, vecs


def random_spd(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    """A comfortably conditioned random symmetric positive definite matrix."""
    A = rng.normal(size=(n, n))
    return symmetrize(scale * (A @ A.T + 0.5 * n * np.eye(n)))


def random_problem(
    rng: np.random.Generator,
    n: int | None = None,
    gap: float = 0.05,
    epsilon: float = 1e-5,
    perturb: bool = True,
):
    """Build a problem whose initialization contract sweep passes.

    ``gap`` is the target initial duality gap (must stay under the 0.1
    ceiling); ``perturb`` nudges the warm start off the exact central path
    while keeping it well inside the neighborhood.
    """
    if n is None:
        n = int(rng.integers(1, 5))
    N = sym_dim(n)
    while True:
        fs = [symmetrize(rng.normal(size=(n, n))) for _ in range(N)]
        fmat = np.vstack([vecs(f) for f in fs])
        if np.linalg.matrix_rank(fmat) == N:
            break

    Z = random_spd(rng, n)
    b = -(fmat @ vecs(Z))

    mu = gap / n
    X = mu * sym_inv(Z)
    if perturb and n > 1:
        E = symmetrize(rng.normal(size=(n, n)))
        denom = max(1e-12, float(np.linalg.norm(E, 2)) * float(np.linalg.norm(Z, 2)))
        scale = 0.05 * mu / denom
        for _ in range(8):
            cand = symmetrize(X + scale * E)
            g = trace_inner(cand, Z)
            dev = float(np.linalg.norm(cand @ Z - (g / n) * np.eye(n), "fro"))
            if min_eigenvalue(cand) > 1e-10 and 0 < g <= 0.09 and dev <= 0.25 * (g / n):
                X = cand
                break
            scale *= 0.25

    f0 = random_spd(rng, n)
    return build_problem(f0, fs, b, x0=X, epsilon=epsilon)
