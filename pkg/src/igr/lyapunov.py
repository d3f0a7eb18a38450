"""Lyapunov spectrum of a trajectory from local Jacobian fits.

For every reference point ``v(t)`` the neighbours inside an epsilon ball
give displacement pairs ``mu_i = v(k_i) - v(t)`` and
``z_i = v(k_i + s) - v(t + s)``.  A least-squares Jacobian maps ``mu`` to
``z``; the product of these Jacobians is re-orthonormalised with QR and the
logs of the diagonal of ``R`` are averaged.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree


class InsufficientNeighborsError(RuntimeError):
    pass


class SingularCovarianceError(np.linalg.LinAlgError):
    pass


class TooFewIterationsError(RuntimeError):
    pass


@dataclass(frozen=True)
class EmbeddingConfig:
    """Neighbour-search and fitting settings.

    ``initial_epsilon`` and ``max_epsilon`` are fractions of the attractor
    diameter (the diagonal of the bounding box).  ``neighbor_count``
    defaults to ``2 m``.
    """

    dimension: Optional[int] = None
    evolution_steps: int = 1
    neighbor_count: Optional[int] = None
    initial_epsilon: float = 0.05
    epsilon_growth: float = 1.5
    max_epsilon: float = 0.5
    tikhonov: float = 1e-10

    def __post_init__(self):
        if self.dimension is not None and self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.evolution_steps < 1:
            raise ValueError("evolution_steps must be >= 1")
        if self.neighbor_count is not None and self.dimension is not None \
                and self.neighbor_count < self.dimension:
            raise ValueError("neighbor_count must be >= dimension")
        if not 0 < self.initial_epsilon <= self.max_epsilon:
            raise ValueError("need 0 < initial_epsilon <= max_epsilon")
        if not self.epsilon_growth > 1:
            raise ValueError("epsilon_growth must exceed 1")

    def min_neighbors(self, m: int) -> int:
        if self.neighbor_count is None:
            return 2 * m
        if self.neighbor_count < m:
            raise ValueError("neighbor_count must be >= dimension")
        return self.neighbor_count


@dataclass
class LyapunovSpectrum:
    exponents: np.ndarray        # descending, per discrete step (natural log)
    iterations: int
    skipped: int
    mean_neighbors: float
    max_orthonormality_error: float
    config: EmbeddingConfig

    @property
    def max_exponent(self) -> float:
        return float(self.exponents[0])

    def to_json(self) -> str:
        return json.dumps({
            "exponents": [float(x) for x in self.exponents],
            "units": "per step (natural log)",
            "iterations": self.iterations,
            "skipped_steps": self.skipped,
            "mean_neighbors": self.mean_neighbors,
            "config": asdict(self.config),
        }, indent=2)


def embed(matrix, inputs=None) -> np.ndarray:
    """Turn reservoir rows (optionally plus the input as last coordinate) into points."""
    X = np.asarray(matrix, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if inputs is not None:
        u = np.asarray(inputs, dtype=float).ravel()
        if u.size != X.shape[0]:
            raise ValueError(f"input length {u.size} != row count {X.shape[0]}")
        X = np.column_stack([X, u])
    if not np.all(np.isfinite(X)):
        raise ValueError("trajectory contains non-finite values")
    return X


def attractor_diameter(traj) -> float:
    traj = np.asarray(traj, dtype=float)
    return float(np.linalg.norm(traj.max(axis=0) - traj.min(axis=0)))


class _NeighborSearch:
    def __init__(self, traj, config: EmbeddingConfig):
        self.traj = embed(traj)
        self.config = config
        self.tree = cKDTree(self.traj)
        self.diameter = attractor_diameter(self.traj)
        self.m = self.traj.shape[1]
        self.need = config.min_neighbors(self.m)

    def __call__(self, t: int):
        n, s = self.traj.shape[0], self.config.evolution_steps
        if not 0 <= t < n - s:
            raise IndexError(f"reference index {t} has no image {s} steps ahead")
        frac = self.config.initial_epsilon
        while True:
            idx = np.asarray(self.tree.query_ball_point(self.traj[t], frac * self.diameter), dtype=int)
            idx = np.sort(idx[(idx != t) & (idx < n - s)])
            if idx.size >= self.need:
                return idx, self.traj[idx] - self.traj[t]
            if frac >= self.config.max_epsilon:
                raise InsufficientNeighborsError(
                    f"only {idx.size} neighbours of point {t} within the maximum radius")
            frac = min(frac * self.config.epsilon_growth, self.config.max_epsilon)


def neighbors(traj, t: int, config: EmbeddingConfig = EmbeddingConfig()):
    """Indices ``k_i`` and displacements ``mu_i`` of the neighbours of point ``t``."""
    return _NeighborSearch(traj, config)(t)


def estimate_jacobian(mu, z, tikhonov: float = 1e-10) -> np.ndarray:
    """Least-squares ``J`` with ``z_i ~ J mu_i`` over all pairs.

    ``J = (sum z mu^T)(sum mu mu^T + rho I)^-1`` with
    ``rho = tikhonov * trace / m``.
    """
    mu = np.atleast_2d(np.asarray(mu, dtype=float))
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if mu.shape != z.shape:
        raise ValueError("mu and z must have the same shape")
    m = mu.shape[1]
    cov = mu.T @ mu
    cross = z.T @ mu
    rho = tikhonov * np.trace(cov) / m
    cov[np.diag_indices(m)] += rho
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise SingularCovarianceError("neighbour covariance is singular") from exc
    # J cov = cross  ->  cov J^T = cross^T
    y = np.linalg.solve(chol, cross.T)
    return np.linalg.solve(chol.T, y).T


def spectrum(traj, config: EmbeddingConfig = EmbeddingConfig()) -> LyapunovSpectrum:
    """Lyapunov exponents (per discrete step) of a trajectory of points."""
    traj = embed(traj)
    n, m = traj.shape
    if config.dimension is not None and config.dimension != m:
        raise ValueError(f"config dimension {config.dimension} != trajectory dimension {m}")
    if n < 10 * m:
        raise ValueError(f"trajectory of {n} points is too short for dimension {m}")
    s = config.evolution_steps
    search = _NeighborSearch(traj, config)

    Q = np.eye(m)
    log_sum = np.zeros(m)
    done = skipped = n_neighbors = 0
    worst = 0.0
    tiny = np.finfo(float).tiny
    for t in range(0, n - s, s):
        try:
            idx, mu = search(t)
            z = traj[idx + s] - traj[t + s]
            J = estimate_jacobian(mu, z, config.tikhonov)
        except (InsufficientNeighborsError, SingularCovarianceError):
            skipped += 1
            continue
        Q, R = np.linalg.qr(J @ Q)
        log_sum += np.log(np.maximum(np.abs(np.diag(R)), tiny))
        worst = max(worst, float(np.max(np.abs(Q.T @ Q - np.eye(m)))))
        done += 1
        n_neighbors += idx.size
    if done < 10 * m:
        raise TooFewIterationsError(f"only {done} usable reference points (need {10 * m})")
    exponents = np.sort(log_sum / (done * s))[::-1]
    return LyapunovSpectrum(exponents, done, skipped, n_neighbors / done, worst, config)


def return_map(series) -> np.ndarray:
    """Pairs ``(X(k), X(k+1))`` as an (n-1, 2) array."""
    x = np.asarray(series, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("need at least two samples")
    return np.column_stack([x[:-1], x[1:]])


def write_return_map_csv(series, path) -> None:
    np.savetxt(path, return_map(series), delimiter=",", fmt="%.9g",
               header="x_k,x_k1", comments="")


# reference orbits used by the oracle tests and the notebooks

def logistic_orbit(n: int, x0: float = 0.1234, r: float = 4.0, transient: int = 100) -> np.ndarray:
    x = x0
    for _ in range(transient):
        x = r * x * (1 - x)
    out = np.empty(n)
    for i in range(n):
        out[i] = x
        x = r * x * (1 - x)
    return out


def henon_orbit(n: int, a: float = 1.4, b: float = 0.3, x0=(0.1, 0.1), transient: int = 100) -> np.ndarray:
    x, y = x0
    for _ in range(transient):
        x, y = 1 - a * x * x + y, b * x
    out = np.empty((n, 2))
    for i in range(n):
        out[i] = x, y
        x, y = 1 - a * x * x + y, b * x
    return out
