"""Shared builders for the test suite: random instances, case-study models,
and a hit-and-run facet sampler used by the certificate soundness checks."""

from pathlib import Path

import numpy as np
import pytest

from polyvar.invariance import PolytopeTemplate, VectorField
from polyvar.lpsolve import LPProblem, solve
from polyvar.polynomial import MultiPoly, Rectangle
from polyvar.relaxation import ConstraintSet

MODELS_DIR = Path(__file__).resolve().parent.parent / "models"


@pytest.fixture(scope="session")
def models_dir() -> Path:
    return MODELS_DIR


def random_rectangle(rng, n, min_width=0.5, max_width=4.0) -> Rectangle:
    lo = rng.uniform(-3.0, 0.0, size=n)
    return Rectangle(lo, lo + rng.uniform(min_width, max_width, size=n))


def random_poly(rng, n, max_degree, n_terms=None) -> MultiPoly:
    degrees = rng.integers(0, max_degree + 1, size=n)
    if degrees.sum() == 0:
        degrees[rng.integers(0, n)] = 1
    if n_terms is None:
        n_terms = int(rng.integers(2, 7))
    terms = {}
    for _ in range(n_terms):
        exps = tuple(int(rng.integers(0, degrees[k] + 1)) for k in range(n))
        terms[exps] = terms.get(exps, 0.0) + float(rng.uniform(-2.0, 2.0))
    # guarantee every sampled degree is actually attained
    for k in range(n):
        if degrees[k] > 0:
            exps = [0] * n
            exps[k] = int(degrees[k])
            terms.setdefault(tuple(exps), float(rng.uniform(-2.0, 2.0)))
    return MultiPoly(n, terms)


def random_multi_affine(rng, n) -> MultiPoly:
    terms = {}
    for _ in range(int(rng.integers(2, min(2**n, 6) + 2))):
        exps = tuple(int(b) for b in rng.integers(0, 2, size=n))
        terms[exps] = terms.get(exps, 0.0) + float(rng.uniform(-2.0, 2.0))
    return MultiPoly(n, terms)


def random_feasible_constraints(rng, rect, n_ineq, n_eq) -> ConstraintSet:
    """Constraints guaranteed to admit grid samples: they pass near the
    rectangle's center with generous inequality slack."""
    n = rect.n
    center = (rect.lower + rect.upper) / 2.0
    x0 = center + rng.uniform(-0.05, 0.05, size=n) * rect.width
    ineqs = []
    for _ in range(n_ineq):
        a = rng.normal(size=n)
        slack = rng.uniform(0.2, 1.0) * (1.0 + np.linalg.norm(a))
        ineqs.append((a, float(a @ x0 + slack)))
    eqs = []
    for _ in range(n_eq):
        c = rng.normal(size=n)
        c /= np.linalg.norm(c)
        eqs.append((c, float(c @ x0)))
    return ConstraintSet(n, inequalities=ineqs, equalities=eqs)


def fitzhugh_nagumo() -> tuple[VectorField, Rectangle, np.ndarray, np.ndarray]:
    """Neuron model with stimulus 7/8, its rectangle, 8 uniform normals, and
    the equilibrium used as reference point."""
    fld = VectorField(
        (
            MultiPoly(2, {(1, 0): 1.0, (3, 0): -1.0 / 3.0, (0, 1): -1.0, (0, 0): 0.875}),
            MultiPoly(2, {(1, 0): 0.08, (0, 1): -0.064, (0, 0): 0.056}),
        )
    )
    rect = Rectangle([-2.5, -1.5], [2.5, 3.5])
    angles = 2.0 * np.pi * np.arange(8) / 8
    normals = np.column_stack([np.cos(angles), np.sin(angles)])
    return fld, rect, normals, np.array([0.0, 0.875])


def phytoplankton() -> tuple[VectorField, Rectangle, np.ndarray, np.ndarray]:
    """Plankton growth model, its rectangle, the 18-facet template
    (axis and pairwise-diagonal normals), and the stable equilibrium."""
    fld = VectorField(
        (
            MultiPoly(3, {(0, 0, 0): 1.0, (1, 0, 0): -1.0, (1, 1, 0): -0.25}),
            MultiPoly(3, {(0, 1, 1): 2.0, (0, 1, 0): -1.0}),
            MultiPoly(3, {(1, 0, 0): 0.25, (0, 0, 2): -2.0}),
        )
    )
    rect = Rectangle([0.0, -0.1, 0.0], [3.0, 2.0, 0.6])
    normals = []
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1.0
        normals.append(e.copy())
        normals.append(-e)
    for i in range(3):
        for j in range(i + 1, 3):
            for si in (1.0, -1.0):
                for sj in (1.0, -1.0):
                    v = np.zeros(3)
                    v[i], v[j] = si, sj
                    normals.append(v)
    ref = np.array([1.0, 0.0, np.sqrt(1.0 / 8.0)])
    return fld, rect, np.array(normals), ref


def sample_facet_points(tpl: PolytopeTemplate, rect: Rectangle, k: int, n_points: int, rng):
    """Hit-and-run samples on facet k (within the rectangle); None if empty."""
    a, bk = tpl.normals[k], tpl.offsets[k]
    others = [i for i in range(tpl.m) if i != k]
    lp = LPProblem(
        "min",
        np.zeros(tpl.n),
        G=tpl.normals[others],
        h=tpl.offsets[others],
        A=tpl.normals[k : k + 1],
        d=[bk],
        lo=rect.lower,
        hi=rect.upper,
    )
    sol = solve(lp)
    if sol.status != "optimal":
        return None
    x = sol.x.copy()
    basis = np.linalg.qr(np.column_stack([a / np.linalg.norm(a), np.eye(tpl.n)]))[0][:, 1 : tpl.n]
    rows = [(tpl.normals[i], tpl.offsets[i]) for i in others]
    for j in range(tpl.n):
        e = np.zeros(tpl.n)
        e[j] = 1.0
        rows.append((e, rect.upper[j]))
        rows.append((-e, -rect.lower[j]))
    points = np.empty((n_points, tpl.n))
    for s in range(n_points):
        d = basis @ rng.normal(size=basis.shape[1]) if basis.size else np.zeros(tpl.n)
        t_max, t_min = np.inf, -np.inf
        for g, h in rows:
            gd = float(g @ d)
            slack = float(h - g @ x)
            if gd > 1e-12:
                t_max = min(t_max, slack / gd)
            elif gd < -1e-12:
                t_min = max(t_min, slack / gd)
        if np.isfinite(t_max) and np.isfinite(t_min) and t_max >= t_min:
            x = x + rng.uniform(t_min, t_max) * d
        points[s] = x
    return points
