#!/usr/bin/env python

"""
Manufactured solution of the Helmholtz equation lam*u - laplace(u) = f

    u(x) = cos(k(x1 - 3x2 + 2x3)) sin(k(1 + x1)) sin(k(1 - x2))
           sin(k(2x1 + x2)) sin(k(3x1 - 2x2 + 2x3))

Each factor is a trigonometric function of a linear phase a.x + b, so the
gradient and Laplacian follow from the product rule:

    laplace(u) = -sum_m |a_m|^2 u + 2 sum_{m<n} (a_m.a_n) g_m' g_n' prod_{o!=m,n} g_o
"""

from typing import List, Tuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field

Array = npt.NDArray[np.float64]

# (a, b, is_cosine) per factor, phase k*(a.x + b)
FACTORS: List[Tuple[Tuple[float, float, float], float, bool]] = [
    ((1.0, -3.0, 2.0), 0.0, True),
    ((1.0, 0.0, 0.0), 1.0, False),
    ((0.0, -1.0, 0.0), 1.0, False),
    ((2.0, 1.0, 0.0), 0.0, False),
    ((3.0, -2.0, 2.0), 0.0, False),
]


class ManufacturedProblem(BaseModel):
    """Closed-form solution, gradient, Laplacian and right-hand side"""

    model_config = ConfigDict(frozen=True)

    k: float = Field(default=5.0, description="Wave number of the solution")
    lam: float = Field(default=0.0, ge=0.0, description="Helmholtz parameter")
    domain: Tuple[float, float] = Field(
        default=(0.0, 2 * np.pi), description="Cube domain (lo, hi) in every direction"
    )

    def _factors(self, x: Array) -> Tuple[Array, Array, Array]:
        """Values, derivatives with respect to the phase and phase gradients"""

        x = np.asarray(x, dtype=np.float64)
        a = self.k * np.array([factor[0] for factor in FACTORS])
        b = self.k * np.array([factor[1] for factor in FACTORS])
        cosine = np.array([factor[2] for factor in FACTORS])

        theta = x @ a.T + b
        value = np.where(cosine, np.cos(theta), np.sin(theta))
        derivative = np.where(cosine, -np.sin(theta), np.cos(theta))

        return value, derivative, a

    def evaluate_solution(self, x: Array) -> Array:
        """u at points x of shape (..., 3)"""
        value, _, _ = self._factors(x)
        return np.prod(value, axis=-1)

    def evaluate_gradient(self, x: Array) -> Array:
        """grad u at points x, shape (..., 3)"""

        value, derivative, a = self._factors(x)
        gradient = np.zeros(value.shape[:-1] + (3,))

        for m in range(len(FACTORS)):
            others = np.prod(np.delete(value, m, axis=-1), axis=-1)
            gradient += (derivative[..., m] * others)[..., None] * a[m]

        return gradient

    def evaluate_laplacian(self, x: Array) -> Array:
        value, derivative, a = self._factors(x)

        laplacian = -np.sum(a**2) * np.prod(value, axis=-1)

        for m in range(len(FACTORS)):
            for n in range(m + 1, len(FACTORS)):
                others = np.prod(np.delete(value, [m, n], axis=-1), axis=-1)
                laplacian += 2.0 * (a[m] @ a[n]) * derivative[..., m] * derivative[..., n] * others

        return laplacian

    def evaluate_rhs(self, x: Array) -> Array:
        """f = lam u - laplace(u)"""
        return self.lam * self.evaluate_solution(x) - self.evaluate_laplacian(x)


def evaluate_solution(problem: ManufacturedProblem, x: Array) -> Array:
    return problem.evaluate_solution(x)


def evaluate_rhs(problem: ManufacturedProblem, x: Array) -> Array:
    return problem.evaluate_rhs(x)
