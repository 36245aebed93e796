"""Reference scores computed by iteration or exact matrix powers.

These are the ground truth the Monte Carlo machinery is checked against.
Conventions the Monte Carlo side does not pin down:

* global PageRank spreads dangling mass uniformly; personalized
  PageRank sends it to the seed (the stitched walk resets there);
* SALSA sides are L1-normalised per round, HITS sides L2-normalised.
"""

from __future__ import annotations

import numpy as np

from .graph import Graph


class ConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"no convergence after {iterations} iterations "
                         f"(residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


def _inv(deg: np.ndarray) -> np.ndarray:
    out = np.zeros(deg.shape, dtype=float)
    nz = deg > 0
    out[nz] = 1.0 / deg[nz]
    return out


def _iterate(g: Graph, epsilon: float, reset: np.ndarray, dangling_to: np.ndarray,
             tol: float, max_iter: int, residuals: list | None):
    n = g.n
    A = g.to_csr()
    AT = A.T.tocsr()
    outdeg = np.asarray(A.sum(axis=1)).ravel()
    inv = _inv(outdeg)
    dangling = outdeg == 0
    x = np.full(n, 1.0 / n)
    res = np.inf
    for it in range(1, max_iter + 1):
        walk = AT @ (x * inv) + x[dangling].sum() * dangling_to
        new = epsilon * reset + (1.0 - epsilon) * walk
        res = float(np.abs(new - x).sum())
        if residuals is not None:
            residuals.append(res)
        x = new
        if res < tol:
            return x
    raise ConvergenceError(res, max_iter)


def power_iteration_pagerank(g: Graph, epsilon: float = 0.2, tol: float = 1e-12,
                             max_iter: int = 10_000, residuals: list | None = None) -> np.ndarray:
    """PageRank by repeated application of the reset-walk update.

    Starts from the uniform vector and stops once the L1 change between
    iterates drops below ``tol``.  Pass a list as ``residuals`` to
    collect the per-iteration L1 changes.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = g.n
    if n == 0:
        return np.zeros(0)
    uniform = np.full(n, 1.0 / n)
    return _iterate(g, epsilon, uniform, uniform, tol, max_iter, residuals)


def exact_personalized_pagerank(g: Graph, seed: int, epsilon: float = 0.2,
                                tol: float = 1e-12, max_iter: int = 10_000) -> np.ndarray:
    if tol <= 0:
        raise ValueError("tol must be positive")
    delta = np.zeros(g.n)
    delta[seed] = 1.0
    return _iterate(g, epsilon, delta, delta, tol, max_iter, None)


def personalized_transition_matrix(g: Graph, seed: int, epsilon: float) -> np.ndarray:
    """Dense transition matrix of the walk that resets to ``seed``."""
    n = g.n
    P = np.zeros((n, n))
    for u, out in enumerate(g.out_adj):
        if out:
            for v in out:
                P[u, v] += (1.0 - epsilon) / len(out)
            P[u, seed] += epsilon
        else:
            P[u, seed] = 1.0
    return P


def exact_visit_expectation(g: Graph, seed: int, epsilon: float, s: int,
                            max_nodes: int = 12) -> np.ndarray:
    """Expected visits to each node in the first ``s`` positions of a seeded walk."""
    if g.n > max_nodes:
        raise ValueError(f"dense visit expectation limited to n <= {max_nodes}, got {g.n}")
    P = personalized_transition_matrix(g, seed, epsilon)
    row = np.zeros(g.n)
    row[seed] = 1.0
    total = np.zeros(g.n)
    for _ in range(s):
        total += row
        row = row @ P
    return total


def _salsa_ops(g: Graph):
    A = g.to_csr()
    AT = A.T.tocsr()
    inv_out = _inv(np.asarray(A.sum(axis=1)).ravel())
    inv_in = _inv(np.asarray(A.sum(axis=0)).ravel())
    return A, AT, inv_out, inv_in


def _l1(x: np.ndarray) -> np.ndarray:
    s = x.sum()
    return x / s if s > 0 else x


def _l2(x: np.ndarray) -> np.ndarray:
    s = np.linalg.norm(x)
    return x / s if s > 0 else x


def salsa_scores(g: Graph, iters: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Global SALSA ``(hub, authority)`` by alternating normalised updates."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    A, AT, inv_out, inv_in = _salsa_ops(g)
    h = np.full(g.n, 1.0 / g.n)
    a = h.copy()
    for _ in range(iters):
        a = _l1(AT @ (h * inv_out))
        h = _l1(A @ (a * inv_in))
    return h, a


def personalized_salsa(g: Graph, seed: int, epsilon: float = 0.2,
                       iters: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Personalised SALSA; only the hub equation carries the reset term."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    A, AT, inv_out, inv_in = _salsa_ops(g)
    delta = np.zeros(g.n)
    delta[seed] = 1.0
    h = np.full(g.n, 1.0 / g.n)
    a = h.copy()
    for _ in range(iters):
        a = _l1(AT @ (h * inv_out))
        h = _l1(epsilon * delta + (1.0 - epsilon) * (A @ (a * inv_in)))
    return h, a


def personalized_hits(g: Graph, seed: int, epsilon: float = 0.2,
                      iters: int = 10) -> tuple[np.ndarray, np.ndarray]:
    if iters < 1:
        raise ValueError("iters must be >= 1")
    A = g.to_csr()
    AT = A.T.tocsr()
    delta = np.zeros(g.n)
    delta[seed] = 1.0
    h = _l2(np.ones(g.n))
    a = h.copy()
    for _ in range(iters):
        a = _l2(AT @ h)
        h = _l2(epsilon * delta + (1.0 - epsilon) * (A @ a))
    return h, a


def cosine_scores(g: Graph, seed: int, iters: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Hub = cosine similarity of out-neighbour sets with ``seed``; authority = A^T hub.

    The hub vector is closed-form, so ``iters`` only matters for API
    symmetry with the iterative methods.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    A = g.to_csr()
    outdeg = np.asarray(A.sum(axis=1)).ravel()
    h = np.zeros(g.n)
    if outdeg[seed] > 0:
        overlap = np.asarray(A @ A.getrow(seed).T.toarray()).ravel()
        denom = np.sqrt(outdeg * outdeg[seed])
        nz = denom > 0
        h[nz] = overlap[nz] / denom[nz]
    a = A.T @ h
    return h, np.asarray(a).ravel()


def write_scores_csv(path, scores) -> None:
    with open(path, "w") as fh:
        fh.write("node,score\n")
        for v, s in enumerate(scores):
            fh.write(f"{v},{float(s):.12g}\n")
