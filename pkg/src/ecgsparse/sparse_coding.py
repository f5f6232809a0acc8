"""L1-penalized least-squares coding (LASSO) by feature-sign search.

The production solver is feature_sign; oracle_solve is an independent
cyclic coordinate-descent solver kept for verification.  Both minimize

    0.5 * ||y - D x||_2^2 + lambda * ||x||_1

for a fixed dictionary D with unit-ball columns.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BadConfigError, MaxIterationsError, ShapeMismatchError

# optimality tolerance for the subgradient conditions
OPT_TOL = 1e-7
# ridge added to the active-set Gram system; rank-deficient active sets are
# possible with overcomplete dictionaries, and this stays below OPT_TOL
RIDGE = 1e-10


def default_lambda(d):
    """Default sparsity weight for feature dimension d."""
    return 1.2 / np.sqrt(d)


@dataclass
class SparseVector:
    """Sparse coefficient vector: (index, value) entries, zeros omitted."""

    k: int
    entries: list

    def to_dense(self):
        x = np.zeros(self.k)
        for i, v in self.entries:
            x[i] = v
        return x

    @classmethod
    def from_dense(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(k=len(x), entries=[(int(i), float(x[i]))
                                      for i in np.flatnonzero(x)])

    @property
    def nnz(self):
        return len(self.entries)


@dataclass
class CodingProblem:
    dictionary: np.ndarray
    target: np.ndarray
    lam: float

    def __post_init__(self):
        D = np.asarray(self.dictionary, dtype=float)
        y = np.asarray(self.target, dtype=float)
        if D.ndim != 2 or y.ndim != 1 or D.shape[0] != len(y):
            raise ShapeMismatchError(
                f"dictionary {D.shape} incompatible with target length {len(y)}")
        if self.lam <= 0:
            raise BadConfigError("lambda must be positive")
        norms = np.linalg.norm(D, axis=0)
        if np.any(norms > 1.0 + 1e-9):
            raise BadConfigError(
                f"dictionary columns must lie in the unit ball (max norm {norms.max():.6g})")
        self.dictionary = D
        self.target = y


def _as_dense(x, k):
    if isinstance(x, SparseVector):
        if x.k != k:
            raise ShapeMismatchError(f"code dimension {x.k} != dictionary k {k}")
        return x.to_dense()
    x = np.asarray(x, dtype=float)
    if x.shape != (k,):
        raise ShapeMismatchError(f"code shape {x.shape} != ({k},)")
    return x


def lasso_objective(problem, x):
    """0.5*||y - Dx||^2 + lambda*||x||_1, exactly as defined."""
    D, y = problem.dictionary, problem.target
    xd = _as_dense(x, D.shape[1])
    r = y - D @ xd
    return 0.5 * float(r @ r) + problem.lam * float(np.abs(xd).sum())


# ---------------------------------------------------------------------------
# feature-sign search


def _quad_objective(Gaa, ba, lam, xa, c0):
    # objective restricted to the active set (c0 = y.y)
    return 0.5 * c0 - ba @ xa + 0.5 * xa @ (Gaa @ xa) + lam * np.abs(xa).sum()


def _feature_sign_core(G, b, lam, c0, max_iter):
    """Feature-sign search given precomputed G = D'D and b = D'y."""
    k = len(b)
    x = np.zeros(k)
    theta = np.zeros(k)
    active = np.zeros(k, dtype=bool)

    for _ in range(max_iter):
        grad = G @ x - b
        # activate the most violating zero coefficient (condition b)
        zero = ~active
        if np.any(zero):
            cand = np.where(zero, np.abs(grad), -np.inf)
            j = int(np.argmax(cand))
            if cand[j] > lam + OPT_TOL:
                theta[j] = -np.sign(grad[j])
                active[j] = True
            else:
                return x
        else:
            if np.all(np.abs(grad + lam * theta) <= OPT_TOL):
                return x

        # feature-sign steps until the active-set solve is sign-consistent
        for _ in range(max_iter):
            idx = np.flatnonzero(active)
            Gaa = G[np.ix_(idx, idx)] + RIDGE * np.eye(len(idx))
            ba = b[idx]
            xnew = np.linalg.solve(Gaa, ba - lam * theta[idx])
            if np.all(np.sign(xnew) == theta[idx]):
                x[:] = 0.0
                x[idx] = xnew
                break
            # discrete line search from the current point towards xnew,
            # checking every point where a coefficient crosses zero
            xa = x[idx]
            step = xnew - xa
            best_x = xnew
            best_obj = _quad_objective(Gaa, ba, lam, xnew, c0)
            crossing = (xa != 0) & (np.sign(xa) != np.sign(xnew))
            for m in np.flatnonzero(crossing):
                t = xa[m] / (xa[m] - xnew[m])
                if not 0.0 < t <= 1.0:
                    continue
                xt = xa + t * step
                xt[m] = 0.0
                obj = _quad_objective(Gaa, ba, lam, xt, c0)
                if obj < best_obj:
                    best_obj = obj
                    best_x = xt
            x[:] = 0.0
            x[idx] = best_x
            gone = idx[best_x == 0.0]
            active[gone] = False
            theta[idx] = np.sign(best_x)
            if not np.any(active):
                break
        else:
            raise MaxIterationsError(
                f"feature-sign inner loop exceeded {max_iter} steps")
    raise MaxIterationsError(f"feature-sign exceeded {max_iter} activations")


def feature_sign(problem, max_iter=None):
    """Solve the coding problem; returns a SparseVector.

    The result satisfies the LASSO subgradient conditions at OPT_TOL:
    |D_j'(Dx - y) + lam*sign(x_j)| <= tol on the active set and
    |D_j'(Dx - y)| <= lam + tol elsewhere.  Raises MaxIterationsError if the
    active-set loop exceeds the cap (default 4k) instead of returning a
    silently wrong answer.
    """
    D, y, lam = problem.dictionary, problem.target, problem.lam
    k = D.shape[1]
    if max_iter is None:
        max_iter = 4 * k
    G = D.T @ D
    b = D.T @ y
    x = _feature_sign_core(G, b, lam, float(y @ y), max_iter)
    return SparseVector.from_dense(x)


def encode_all(D, Y, lam, max_iter=None):
    """feature_sign on every column of Y; returns the dense k x Omega code matrix.

    Columns are independent; errors are re-raised with the column index.
    """
    D = np.asarray(D, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or D.shape[0] != Y.shape[0]:
        raise ShapeMismatchError(
            f"dictionary {D.shape} incompatible with features {Y.shape}")
    norms = np.linalg.norm(D, axis=0)
    if np.any(norms > 1.0 + 1e-9):
        raise BadConfigError("dictionary columns must lie in the unit ball")
    if lam <= 0:
        raise BadConfigError("lambda must be positive")
    k = D.shape[1]
    if max_iter is None:
        max_iter = 4 * k
    G = D.T @ D
    X = np.zeros((k, Y.shape[1]))
    for i in range(Y.shape[1]):
        y = Y[:, i]
        try:
            X[:, i] = _feature_sign_core(G, D.T @ y, lam, float(y @ y), max_iter)
        except MaxIterationsError as e:
            raise MaxIterationsError(f"column {i}: {e}") from e
    return X


# ---------------------------------------------------------------------------
# verification oracle: cyclic coordinate descent


def oracle_solve(problem, max_sweeps=10000, tol=1e-12):
    """Coordinate-descent LASSO, used only to cross-check feature_sign.

    Exact per-coordinate soft-threshold updates, swept cyclically until the
    largest coordinate change in a sweep is below tol.  Returns the final
    iterate even if the sweep cap is reached.
    """
    D, y, lam = problem.dictionary, problem.target, problem.lam
    k = D.shape[1]
    G = D.T @ D
    b = D.T @ y
    x = np.zeros(k)
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(k):
            gjj = G[j, j]
            if gjj < 1e-15:
                continue
            cj = b[j] - G[j] @ x + gjj * x[j]
            new = np.sign(cj) * max(abs(cj) - lam, 0.0) / gjj
            delta = max(delta, abs(new - x[j]))
            x[j] = new
        if delta < tol:
            break
    return SparseVector.from_dense(x)


def check_optimality(problem, x, tol=OPT_TOL):
    """Max violation of the LASSO subgradient conditions (0 when optimal)."""
    D, y, lam = problem.dictionary, problem.target, problem.lam
    xd = _as_dense(x, D.shape[1])
    grad = D.T @ (D @ xd - y)
    act = xd != 0
    viol_a = np.abs(grad[act] + lam * np.sign(xd[act]))
    viol_b = np.abs(grad[~act]) - lam
    worst = 0.0
    if viol_a.size:
        worst = max(worst, float(viol_a.max()))
    if viol_b.size:
        worst = max(worst, float(max(viol_b.max(), 0.0)))
    return worst
