"""Synthetic stochastic objectives with analytic gradients and known constants.

Every kind exposes the same oracle surface: exact loss and full gradient,
a noisy gradient sampler (full gradient plus independent uniform noise on
[-noise_radius, noise_radius] per component, so unbiasedness and a bounded
second moment hold by construction), and metadata (L, G^2, f*) valid over
a stated operating region. Iterates that leave the region are flagged by
the run driver, not rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KINDS = ("noisy_quadratic", "noisy_rosenbrock", "logistic_synthetic")


@dataclass(frozen=True)
class ProblemMetadata:
    L: float        # gradient Lipschitz constant (exact where stated, else a bound)
    G_sq: float     # second-moment bound over the operating region
    f_star: float   # lower bound on f (exact where known)
    region: str     # human-readable description of the operating region


class StochasticProblem:
    """Shared oracle plumbing; subclasses define the objective."""

    kind: str
    dim: int
    noise_radius: float
    metadata: ProblemMetadata
    eval_every = 1

    def loss(self, x) -> float:
        raise NotImplementedError

    def full_gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def in_region(self, x) -> bool:
        raise NotImplementedError

    def initial_point(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def _check_dim(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a vector of dimension {self.dim}, got shape {x.shape}")
        return x

    def sample_gradient(self, x, rng: np.random.Generator) -> np.ndarray:
        g = self.full_gradient(x)
        r = self.noise_radius
        return g + rng.uniform(-r, r, self.dim)

    def estimate_second_moment(self, x, n: int, rng: np.random.Generator) -> float:
        if not (isinstance(n, int) and n >= 1):
            raise ValueError(f"n must be an integer >= 1, got {n!r}")
        base = self.full_gradient(x)
        r = self.noise_radius
        total = 0.0
        chunk = 200_000 // max(self.dim, 1) + 1
        done = 0
        while done < n:
            k = min(chunk, n - done)
            g = base + rng.uniform(-r, r, (k, self.dim))
            total += float((g * g).sum())
            done += k
        return total / n

    # oracle surface used by the run driver
    def sample(self, x, rng: np.random.Generator):
        return self.loss(x), self.sample_gradient(x, rng)

    def evaluate(self, x):
        return self.loss(x), self.full_gradient(x)


class NoisyQuadratic(StochasticProblem):
    """f(x) = x'Ax/2 - b'x with diagonal A, eigenvalues log-spaced in [1, cond].

    The minimizer is drawn uniformly from [-1, 1]^dim at construction and
    b = A x*. L equals the condition number exactly; the operating region
    is the ball of radius 10 around x*, over which sup ||grad f|| = L * 10.
    """

    kind = "noisy_quadratic"
    REGION_RADIUS = 10.0

    def __init__(self, dim: int, condition_number: float, noise_radius: float, seed: int):
        rng = np.random.default_rng(seed)
        if dim == 1:
            eigs = np.array([float(condition_number)])
        else:
            eigs = np.geomspace(1.0, float(condition_number), dim)
            eigs[0] = 1.0
            eigs[-1] = float(condition_number)
        self.dim = dim
        self.noise_radius = float(noise_radius)
        self.eigs = eigs
        self.x_star = rng.uniform(-1.0, 1.0, dim)
        self.b = eigs * self.x_star
        L = float(condition_number)
        R = self.REGION_RADIUS
        G_sq = (L * R) ** 2 + dim * noise_radius ** 2 / 3.0
        self.metadata = ProblemMetadata(L=L, G_sq=G_sq, f_star=float(self.loss(self.x_star)),
                                        region=f"ball of radius {R:g} around the minimizer")

    def loss(self, x) -> float:
        x = self._check_dim(x)
        return float(0.5 * x @ (self.eigs * x) - self.b @ x)

    def full_gradient(self, x) -> np.ndarray:
        x = self._check_dim(x)
        return self.eigs * x - self.b

    def in_region(self, x) -> bool:
        return float(np.linalg.norm(np.asarray(x) - self.x_star)) <= self.REGION_RADIUS

    def initial_point(self, rng: np.random.Generator) -> np.ndarray:
        u = rng.standard_normal(self.dim)
        u /= np.linalg.norm(u)
        return self.x_star + (self.REGION_RADIUS / 2.0) * u


class NoisyRosenbrock(StochasticProblem):
    """Chained Rosenbrock: sum of 100(x_{i+1} - x_i^2)^2 + (1 - x_i)^2.

    Non-convex, global minimum 0 at the all-ones point. The operating
    region is the box |x_i| <= 2.5; L and the gradient bound come from
    interval arithmetic over that box (Hessian diagonal at most
    1200 B^2 + 400 B + 202 and off-diagonal row sum at most 800 B with
    B = 2.5, hence L <= 10702), so they are conservative bounds, not
    exact constants.
    """

    kind = "noisy_rosenbrock"
    BOX = 2.5

    def __init__(self, dim: int, condition_number: float, noise_radius: float, seed: int):
        if dim < 2:
            raise ValueError("noisy_rosenbrock needs dim >= 2")
        self.dim = dim
        self.noise_radius = float(noise_radius)
        B = self.BOX
        L = 1200 * B * B + 400 * B + 202 + 800 * B
        gcomp = 400 * B * (B + B * B) + 2 * (1 + B) + 200 * (B + B * B)
        G_sq = dim * gcomp ** 2 + dim * noise_radius ** 2 / 3.0
        self.metadata = ProblemMetadata(L=float(L), G_sq=float(G_sq), f_star=0.0,
                                        region=f"box |x_i| <= {B:g}")

    def loss(self, x) -> float:
        x = self._check_dim(x)
        head, tail = x[:-1], x[1:]
        return float((100.0 * (tail - head ** 2) ** 2 + (1.0 - head) ** 2).sum())

    def full_gradient(self, x) -> np.ndarray:
        x = self._check_dim(x)
        g = np.zeros_like(x)
        head, tail = x[:-1], x[1:]
        gap = tail - head ** 2
        g[:-1] += -400.0 * head * gap - 2.0 * (1.0 - head)
        g[1:] += 200.0 * gap
        return g

    def in_region(self, x) -> bool:
        return bool(np.all(np.abs(np.asarray(x)) <= self.BOX))

    def initial_point(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-1.5, 1.5, self.dim)


class LogisticSynthetic(StochasticProblem):
    """Binary logistic loss on a sampled design matrix.

    f(w) = mean_i log(1 + exp(-y_i x_i'w)). Columns of the design are
    scaled geometrically so the Gram matrix conditioning roughly follows
    condition_number. L = lambda_max(X'X)/(4n) is exact (the Hessian is
    maximal at w = 0); ||grad f|| <= mean row norm everywhere, so the
    operating region is all of R^dim. f* = 0 is a strict lower bound.
    """

    kind = "logistic_synthetic"

    def __init__(self, dim: int, condition_number: float, noise_radius: float, seed: int):
        rng = np.random.default_rng(seed)
        n = min(2000, max(50, 10 * dim))
        X = rng.standard_normal((n, dim))
        X *= np.geomspace(1.0, math.sqrt(condition_number), dim)
        w_true = rng.standard_normal(dim)
        y = np.sign(X @ w_true + 0.5 * rng.standard_normal(n))
        y[y == 0] = 1.0
        self.dim = dim
        self.noise_radius = float(noise_radius)
        self.X = X
        self.y = y
        self.n = n
        L = float(np.linalg.eigvalsh(X.T @ X)[-1] / (4.0 * n))
        grad_bound = float(np.linalg.norm(X, axis=1).mean())
        G_sq = grad_bound ** 2 + dim * noise_radius ** 2 / 3.0
        self.metadata = ProblemMetadata(L=L, G_sq=G_sq, f_star=0.0, region="all of R^dim")

    def loss(self, w) -> float:
        w = self._check_dim(w)
        return float(np.logaddexp(0.0, -self.y * (self.X @ w)).mean())

    def full_gradient(self, w) -> np.ndarray:
        w = self._check_dim(w)
        z = -self.y * (self.X @ w)
        # sigmoid(z) without overflow on either tail
        s = np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                     np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
        return -(self.X.T @ (self.y * s)) / self.n

    def in_region(self, x) -> bool:
        return True

    def initial_point(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(self.dim) / math.sqrt(self.dim)


def make_problem(kind: str, dim: int, condition_number: float = 10.0,
                 noise_radius: float = 1.0, seed: int = 0) -> StochasticProblem:
    if not (isinstance(dim, int) and dim >= 1):
        raise ValueError(f"dim must be an integer >= 1, got {dim!r}")
    if not condition_number >= 1:
        raise ValueError(f"condition_number must be >= 1, got {condition_number!r}")
    if not noise_radius >= 0:
        raise ValueError(f"noise_radius must be >= 0, got {noise_radius!r}")
    if kind == "noisy_quadratic":
        return NoisyQuadratic(dim, condition_number, noise_radius, seed)
    if kind == "noisy_rosenbrock":
        return NoisyRosenbrock(dim, condition_number, noise_radius, seed)
    if kind == "logistic_synthetic":
        return LogisticSynthetic(dim, condition_number, noise_radius, seed)
    raise ValueError(f"unknown problem kind {kind!r}; expected one of {KINDS}")


# module-level forms of the oracle operations
def loss(problem: StochasticProblem, x) -> float:
    return problem.loss(x)


def full_gradient(problem: StochasticProblem, x) -> np.ndarray:
    return problem.full_gradient(x)


def sample_gradient(problem: StochasticProblem, x, rng: np.random.Generator) -> np.ndarray:
    return problem.sample_gradient(x, rng)


def estimate_second_moment(problem: StochasticProblem, x, n: int, rng: np.random.Generator) -> float:
    return problem.estimate_second_moment(x, n, rng)
