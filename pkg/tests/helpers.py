"""Shared oracles for the test suite.

``math_eval`` walks an AST with the ``math`` module only, so it never touches
jet arithmetic; finite differences built on it are an independent check.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from itertools import product
from math import comb

import numpy as np
from hypothesis import strategies as st

from harmricci.expr import Const, FieldEnv, Unary, Var, eval_jet, parse
from harmricci.jet import JetConfig

_UNARY = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "atan": math.atan,
}


def math_eval(node, point) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return node.value if node.slot is None else float(point[node.slot])
    if isinstance(node, Unary):
        a = math_eval(node.arg, point)
        return -a if node.op == "neg" else _UNARY[node.op](a)
    a, b = math_eval(node.left, point), math_eval(node.right, point)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        return a / b
    return a**b


def central_difference(fn, point, direction, h):
    """Second-order central difference of ``fn`` along ``direction``."""
    plus = [p + h * d for p, d in zip(point, direction)]
    minus = [p - h * d for p, d in zip(point, direction)]
    return (fn(plus) - fn(minus)) / (2 * h)


# smooth everywhere on the real line, so random points never leave the domain
_SAFE_UNARY = ("sin", "cos", "atan")


def random_expression(rng: random.Random, nvars: int, depth: int = 3) -> str:
    """A random smooth expression in x1..x{nvars}."""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.6:
            return f"x{rng.randint(1, nvars)}"
        return repr(round(rng.uniform(0.2, 2.0), 3))
    kind = rng.random()
    if kind < 0.3:
        return f"{rng.choice(_SAFE_UNARY)}({random_expression(rng, nvars, depth - 1)})"
    if kind < 0.4:
        return f"exp(0.3*{random_expression(rng, nvars, depth - 1)})"
    if kind < 0.5:
        return f"sqrt(1 + ({random_expression(rng, nvars, depth - 1)})^2)"
    if kind < 0.6:
        return f"({random_expression(rng, nvars, depth - 1)})^{rng.randint(2, 3)}"
    if kind < 0.7:
        return f"1/(2 + sin({random_expression(rng, nvars, depth - 1)}))"
    op = rng.choice("+-*")
    return f"({random_expression(rng, nvars, depth - 1)} {op} {random_expression(rng, nvars, depth - 1)})"


@st.composite
def expression_texts(draw, nvars: int = 2, depth: int = 3):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_expression(random.Random(seed), nvars, depth)


def random_polynomial(rng: random.Random, nvars: int, degree: int) -> tuple[str, dict]:
    """Polynomial text with small integer coefficients and its coefficient map."""
    coeffs = {}
    terms = []
    for _ in range(rng.randint(1, 6)):
        mi = [0] * nvars
        for _ in range(rng.randint(0, degree)):
            mi[rng.randrange(nvars)] += 1
        c = rng.randint(-5, 5)
        if c == 0:
            continue
        coeffs[tuple(mi)] = coeffs.get(tuple(mi), 0) + c
        mono = "*".join(f"x{i + 1}^{e}" for i, e in enumerate(mi) if e)
        terms.append(f"{c}" + (f"*{mono}" if mono else ""))
    return (" + ".join(terms) if terms else "0"), coeffs


def fd_slope(node, point, direction, exact, hs=(1e-2, 1e-3, 1e-4)):
    errs = [abs(central_difference(lambda q: math_eval(node, q), point, direction, h) - exact) for h in hs]
    return np.polyfit(np.log(hs), np.log(errs), 1)[0]


def directional_taylor(jet, direction, degree):
    """Taylor coefficient of t^degree in t -> f(p + t d)."""
    space = jet.space
    total = 0.0
    for mi in space.multis:
        if sum(mi) == degree:
            total += jet.coeffs[space.index[mi]] * np.prod([d**e for d, e in zip(direction, mi)])
    return float(total)


def nondegenerate_cases(count, seed=2024, m=3):
    """Random (expression, point, direction) triples whose central-difference
    error is dominated by truncation: the t^3 coefficient along the direction
    must not vanish, otherwise the error is pure roundoff and has no slope."""
    rng = random.Random(seed)
    env = FieldEnv(m)
    cases = []
    while len(cases) < count:
        node = parse(random_expression(rng, m, 4), env)
        p = [rng.uniform(-1, 1) for _ in range(m)]
        d = np.array([rng.uniform(-1, 1) for _ in range(m)])
        d /= np.linalg.norm(d)
        jet = eval_jet(node, p, JetConfig(m, 3))
        if abs(directional_taylor(jet, d, 3)) < 1e-2 * max(1.0, abs(jet.value)):
            continue
        cases.append((node, p, d, directional_taylor(jet, d, 1)))
    return cases


def taylor_exact(coeffs: dict, point, order):
    """Taylor coefficients of a polynomial at ``point`` with rational arithmetic."""
    out = {}
    for mi, c in coeffs.items():
        for shift in product(*(range(e + 1) for e in mi)):
            if sum(shift) > order:
                continue
            term = Fraction(c)
            for e, s, p in zip(mi, shift, point):
                term *= comb(e, s) * Fraction(p) ** (e - s)
            out[shift] = out.get(shift, 0) + term
    return out
