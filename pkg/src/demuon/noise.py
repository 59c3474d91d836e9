"""Heavy-tailed stochastic gradient oracles with counter-based seeding.

Each (base_seed, node, iteration) triple owns an independent stream, so
per-node draws are order-independent and reruns are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import problems

GAUSSIAN = "gaussian"
STUDENT_T = "student_t"
FAMILIES = (GAUSSIAN, STUDENT_T)


@dataclass(frozen=True)
class NoiseModel:
    """Noise family and tail parameters for the stochastic gradient oracle.

    `alpha` is the moment order that stays bounded; Student-t with
    dof > alpha keeps that moment finite while the variance diverges for
    dof <= 2. The Gaussian family is the alpha = 2 control. scale = 0 gives
    the exact-gradient (noiseless) oracle.
    """

    family: str
    alpha: float = 2.0
    scale: float = 1.0
    dof: float | None = None
    base_seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"noise family must be one of {FAMILIES}, got {self.family!r}")
        if not 1.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (1, 2], got {self.alpha}")
        if self.scale < 0:
            raise ValueError(f"scale must be nonnegative, got {self.scale}")
        if self.family == GAUSSIAN and self.alpha != 2.0:
            raise ValueError("gaussian noise is only valid with alpha = 2")
        if self.family == STUDENT_T:
            if self.dof is None:
                raise ValueError("student_t noise requires dof")
            if self.dof <= self.alpha:
                raise ValueError(
                    f"student_t dof must exceed alpha for a finite alpha-moment, "
                    f"got dof={self.dof}, alpha={self.alpha}"
                )
        if not 0 <= self.base_seed < 2**64:
            raise ValueError(f"base_seed must be a 64-bit nonnegative integer, got {self.base_seed}")


def _stream(model: NoiseModel, node: int, iteration: int) -> np.random.Generator:
    return np.random.default_rng((model.base_seed, node, iteration))


def sample_noise(model: NoiseModel, m: int, n: int, node: int, iteration: int) -> np.ndarray:
    """Draw one zero-mean m x n noise matrix from the (node, iteration) stream."""
    rng = _stream(model, node, iteration)
    if model.family == GAUSSIAN:
        return rng.normal(0.0, model.scale, size=(m, n))
    return model.scale * rng.standard_t(model.dof, size=(m, n))


def stochastic_gradient(problem, i: int, x: np.ndarray, model: NoiseModel, iteration: int) -> np.ndarray:
    """Exact local gradient plus one sampled noise matrix (unbiased by construction)."""
    grad = problems.exact_gradient(problem, i, x)
    return grad + sample_noise(model, problem.m, problem.n, i, iteration)
