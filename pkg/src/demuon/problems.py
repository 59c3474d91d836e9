"""Desk-scale decentralized matrix objectives with exact value/gradient oracles.

Two synthetic families plus file ingestion:

  quadratic       f_i(X) = 0.5 ||A_i X - B_i||_F^2        (A_i: p x m, B_i: p x n)
  nonconvex_gram  f_i(X) = 0.25 ||X X^T - C_i||_F^2       (C_i: m x m symmetric)

Problem file format (dense CSV blocks, nodes in index order):

  header line:  kind N m n [p]
  quadratic:        per node, p rows of A_i then p rows of B_i
  nonconvex_gram:   per node, m rows of C_i
"""

from __future__ import annotations

from dataclasses import dataclass
from math import inf

import numpy as np

from .linalg import as_matrix, nuclear_norm, spectral_norm

QUADRATIC = "quadratic"
NONCONVEX_GRAM = "nonconvex_gram"
KINDS = (QUADRATIC, NONCONVEX_GRAM)


class ProblemFormatError(ValueError):
    """A problem file failed to parse or had inconsistent dimensions."""


@dataclass(frozen=True)
class ProblemSet:
    """N local objectives over m x n iterates, with certified constants.

    `lipschitz_star` bounds the nuclear-norm gradient variation against the
    spectral-norm argument distance; for quadratics it is global
    (ball_radius = inf), for the Gram family it is certified only while
    spectral_norm(X) <= ball_radius.
    """

    kind: str
    n_nodes: int
    m: int
    n: int
    a: tuple = ()
    b: tuple = ()
    c: tuple = ()
    lipschitz_star: float | None = None
    f_low: float | None = None
    ball_radius: float = inf

    @property
    def lipschitz_stacked(self) -> float | None:
        return None if self.lipschitz_star is None else self.n_nodes * self.lipschitz_star


def _check_node(problem: ProblemSet, i: int):
    if not 0 <= i < problem.n_nodes:
        raise IndexError(f"node index {i} out of range for {problem.n_nodes} nodes")


def _check_shape(problem: ProblemSet, x: np.ndarray):
    if x.shape != (problem.m, problem.n):
        raise ValueError(f"iterate shape {x.shape} does not match problem ({problem.m}, {problem.n})")


def value(problem: ProblemSet, i: int, x) -> float:
    """Local objective f_i at x."""
    x = as_matrix(x)
    _check_node(problem, i)
    _check_shape(problem, x)
    if problem.kind == QUADRATIC:
        r = problem.a[i] @ x - problem.b[i]
        return 0.5 * float(np.sum(r * r))
    g = x @ x.T - problem.c[i]
    return 0.25 * float(np.sum(g * g))


def exact_gradient(problem: ProblemSet, i: int, x) -> np.ndarray:
    """Exact gradient of f_i at x."""
    x = as_matrix(x)
    _check_node(problem, i)
    _check_shape(problem, x)
    if problem.kind == QUADRATIC:
        return problem.a[i].T @ (problem.a[i] @ x - problem.b[i])
    return (x @ x.T - problem.c[i]) @ x


def average_gradient(problem: ProblemSet, xs) -> np.ndarray:
    """(1/N) sum_i grad f_i(xs[i]) for one iterate per node."""
    xs = list(xs)
    if len(xs) != problem.n_nodes:
        raise ValueError(f"expected {problem.n_nodes} iterates, got {len(xs)}")
    total = np.zeros((problem.m, problem.n))
    for i, x in enumerate(xs):
        total += exact_gradient(problem, i, x)
    return total / problem.n_nodes


def objective_at(problem: ProblemSet, x) -> float:
    """Global objective f(x) = (1/N) sum_i f_i(x) at a common iterate."""
    return sum(value(problem, i, x) for i in range(problem.n_nodes)) / problem.n_nodes


def _conditioned_random(rng: np.random.Generator, rows: int, cols: int, cond: float) -> np.ndarray:
    """Random matrix with singular values spread linearly over [1/cond, 1]."""
    g = rng.standard_normal((rows, cols))
    u, _, vt = np.linalg.svd(g, full_matrices=False)
    r = min(rows, cols)
    s = np.linspace(1.0, 1.0 / cond, r)
    return (u * s) @ vt


def make_quadratic(
    n_nodes: int,
    m: int,
    n: int,
    p: int,
    heterogeneity: float = 0.0,
    seed: int = 0,
    cond: float = 3.0,
) -> ProblemSet:
    """Synthesize a quadratic problem with a known consensus optimum.

    B_i = A_i X* + heterogeneity * D_i with sum_i D_i = 0, so at
    heterogeneity = 0 every node shares the minimizer X* and f_low = 0.
    The Lipschitz certificate max_i ||A_i^T A_i||_* holds globally.
    """
    if heterogeneity < 0:
        raise ValueError(f"heterogeneity must be nonnegative, got {heterogeneity}")
    rng = np.random.default_rng(seed)
    a = tuple(_conditioned_random(rng, p, m, cond) for _ in range(n_nodes))
    x_star = 0.5 * rng.standard_normal((m, n))
    deltas = [rng.standard_normal((p, n)) for _ in range(n_nodes - 1)]
    deltas.append(-np.sum(deltas, axis=0) if deltas else np.zeros((p, n)))
    b = tuple(a[i] @ x_star + heterogeneity * deltas[i] for i in range(n_nodes))
    l_star = max(nuclear_norm(ai.T @ ai) for ai in a)
    problem = ProblemSet(QUADRATIC, n_nodes, m, n, a=a, b=b, lipschitz_star=l_star, f_low=0.0)
    if heterogeneity > 0:
        stacked_a = np.vstack(a)
        stacked_b = np.vstack(b)
        x_opt = np.linalg.lstsq(stacked_a, stacked_b, rcond=None)[0]
        problem = ProblemSet(
            QUADRATIC, n_nodes, m, n, a=a, b=b,
            lipschitz_star=l_star, f_low=objective_at(problem, x_opt),
        )
    return problem


def make_nonconvex_gram(
    n_nodes: int,
    m: int,
    n: int,
    heterogeneity: float = 0.0,
    seed: int = 0,
    ball_radius: float | None = None,
) -> ProblemSet:
    """Synthesize a Gram-matching problem C_i = X* X*^T + heterogeneity * S_i.

    The S_i are symmetric with zero sum. f_low = 0 is a valid lower bound
    (each f_i >= 0). The Lipschitz certificate is only claimed on the
    spectral ball ||X|| <= ball_radius.
    """
    if heterogeneity < 0:
        raise ValueError(f"heterogeneity must be nonnegative, got {heterogeneity}")
    rng = np.random.default_rng(seed)
    x_star = 0.5 * rng.standard_normal((m, n))
    sym = []
    for _ in range(n_nodes - 1):
        g = rng.standard_normal((m, m))
        sym.append(0.5 * (g + g.T))
    sym.append(-np.sum(sym, axis=0) if sym else np.zeros((m, m)))
    base = x_star @ x_star.T
    c = tuple(base + heterogeneity * sym[i] for i in range(n_nodes))
    if ball_radius is None:
        ball_radius = 2.0 * (1.0 + spectral_norm(x_star))
    l_star = 3.0 * min(m, n) * ball_radius**2 + max(nuclear_norm(ci) for ci in c)
    return ProblemSet(
        NONCONVEX_GRAM, n_nodes, m, n, c=c,
        lipschitz_star=l_star, f_low=0.0, ball_radius=ball_radius,
    )


def _parse_block(lines, start: int, rows: int, cols: int, label: str) -> tuple[np.ndarray, int]:
    out = np.zeros((rows, cols))
    for r in range(rows):
        idx = start + r
        if idx >= len(lines):
            raise ProblemFormatError(f"unexpected end of file while reading {label}, line {idx + 1}")
        parts = lines[idx].split(",")
        if len(parts) != cols:
            raise ProblemFormatError(
                f"line {idx + 1}: {label} expects {cols} values per row, got {len(parts)}"
            )
        try:
            out[r] = [float(p) for p in parts]
        except ValueError as exc:
            raise ProblemFormatError(f"line {idx + 1}: {label}: {exc}") from exc
    return out, start + rows


def load_problem(path) -> ProblemSet:
    """Parse a problem file (header + per-node dense CSV blocks)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ProblemFormatError(f"{path}: empty problem file")
    header = lines[0].split()
    if not header or header[0] not in KINDS:
        raise ProblemFormatError(f"{path}: line 1: header must start with one of {KINDS}")
    kind = header[0]
    want = 5 if kind == QUADRATIC else 4
    if len(header) != want:
        raise ProblemFormatError(
            f"{path}: line 1: {kind} header needs {want} fields (kind N m n"
            + (" p)" if kind == QUADRATIC else ")")
        )
    try:
        dims = [int(tok) for tok in header[1:]]
    except ValueError as exc:
        raise ProblemFormatError(f"{path}: line 1: {exc}") from exc
    if any(d < 1 for d in dims):
        raise ProblemFormatError(f"{path}: line 1: dimensions must be positive, got {dims}")
    n_nodes, m, n = dims[0], dims[1], dims[2]
    pos = 1
    if kind == QUADRATIC:
        p = dims[3]
        a, b = [], []
        for i in range(n_nodes):
            try:
                ai, pos = _parse_block(lines, pos, p, m, f"A_{i}")
                bi, pos = _parse_block(lines, pos, p, n, f"B_{i}")
            except ProblemFormatError as exc:
                raise ProblemFormatError(f"{path}: node {i}: {exc}") from exc
            a.append(ai)
            b.append(bi)
        problem = ProblemSet(QUADRATIC, n_nodes, m, n, a=tuple(a), b=tuple(b))
        l_star = max(nuclear_norm(ai.T @ ai) for ai in a)
        stacked_a = np.vstack(a)
        stacked_b = np.vstack(b)
        x_opt = np.linalg.lstsq(stacked_a, stacked_b, rcond=None)[0]
        problem = ProblemSet(
            QUADRATIC, n_nodes, m, n, a=tuple(a), b=tuple(b),
            lipschitz_star=l_star, f_low=objective_at(problem, x_opt),
        )
    else:
        c = []
        for i in range(n_nodes):
            try:
                ci, pos = _parse_block(lines, pos, m, m, f"C_{i}")
            except ProblemFormatError as exc:
                raise ProblemFormatError(f"{path}: node {i}: {exc}") from exc
            c.append(ci)
        radius = 2.0 * (1.0 + max(spectral_norm(ci) for ci in c) ** 0.5)
        l_star = 3.0 * min(m, n) * radius**2 + max(nuclear_norm(ci) for ci in c)
        problem = ProblemSet(
            NONCONVEX_GRAM, n_nodes, m, n, c=tuple(c),
            lipschitz_star=l_star, f_low=0.0, ball_radius=radius,
        )
    if pos != len(lines):
        raise ProblemFormatError(f"{path}: line {pos + 1}: trailing data after last node block")
    return problem


def dump_problem(problem: ProblemSet, path):
    """Write a ProblemSet in the file format accepted by load_problem."""
    with open(path, "w", encoding="utf-8") as fh:
        if problem.kind == QUADRATIC:
            p = problem.a[0].shape[0]
            fh.write(f"{problem.kind} {problem.n_nodes} {problem.m} {problem.n} {p}\n")
            for i in range(problem.n_nodes):
                for block in (problem.a[i], problem.b[i]):
                    for row in block:
                        fh.write(",".join(repr(float(x)) for x in row) + "\n")
        else:
            fh.write(f"{problem.kind} {problem.n_nodes} {problem.m} {problem.n}\n")
            for i in range(problem.n_nodes):
                for row in problem.c[i]:
                    fh.write(",".join(repr(float(x)) for x in row) + "\n")
