"""Coordinate formulas differentiated symbolically with sympy.

An independent route to the engine's outputs: every tensor is built from
partial derivatives of explicit expressions, then evaluated at one point.
Index conventions match the engine (derivative slots last, pullback slot
first, R^p_jkl = ∂_kΓ^p_lj − ∂_lΓ^p_kj + Γ^p_kqΓ^q_lj − Γ^p_lqΓ^q_kj).
"""

from __future__ import annotations

import itertools
from functools import cached_property

import mpmath
import numpy as np
import sympy as sp


def _sym(text: str, names: dict) -> sp.Expr:
    return sp.sympify(text.replace("^", "**"), locals=names)


class SymbolicPoint:
    def __init__(self, metric, point, target=None, components=None, alpha=1.0, potential=None):
        self.m = len(metric)
        self.x = sp.symbols(f"x1:{self.m + 1}")
        names = {str(s): s for s in self.x}
        self.g = sp.Matrix([[_sym(e, names) for e in row] for row in metric])
        self.ginv = self.g.inv()
        self.point = tuple(point)
        self.alpha = alpha
        if target is None:
            target, components = [["1"]], ["0"]
        self.n = len(target)
        self.y = sp.symbols(f"y1:{self.n + 1}")
        tnames = {str(s): s for s in self.y}
        h = sp.Matrix([[_sym(e, tnames) for e in row] for row in target])
        self.phi = [_sym(c, names) for c in components]
        hinv = h.inv()
        tgam = [[[sum(hinv[a, d] * (sp.diff(h[b, d], self.y[c]) + sp.diff(h[c, d], self.y[b])
                                    - sp.diff(h[b, c], self.y[d])) for d in range(self.n)) / 2
                  for c in range(self.n)] for b in range(self.n)] for a in range(self.n)]
        triem = [[[[sp.diff(tgam[p][l][j], self.y[k]) - sp.diff(tgam[p][k][j], self.y[l])
                    + sum(tgam[p][k][q] * tgam[q][l][j] - tgam[p][l][q] * tgam[q][k][j] for q in range(self.n))
                    for l in range(self.n)] for k in range(self.n)] for j in range(self.n)] for p in range(self.n)]
        back = dict(zip(self.y, self.phi))
        self.h = h.subs(back)
        self.tgam = np.array(tgam, dtype=object)
        self.tgam = np.vectorize(lambda e: sp.sympify(e).subs(back), otypes=[object])(self.tgam)
        self.triem = np.vectorize(lambda e: sp.sympify(e).subs(back), otypes=[object])(np.array(triem, dtype=object))
        self.f = _sym(potential, names) if potential is not None else None

    # -- helpers ------------------------------------------------------------

    def num(self, arr) -> np.ndarray:
        arr = np.asarray(arr, dtype=object)
        flat = [sp.sympify(e) for e in arr.ravel()]
        fn = sp.lambdify(self.x, flat, "mpmath", cse=True)
        with mpmath.workdps(30):
            vals = fn(*(mpmath.mpf(v) for v in self.point))
        return np.array([float(v) for v in vals]).reshape(arr.shape)

    def d(self, arr) -> np.ndarray:
        """Partial derivative slot appended last."""
        arr = np.asarray(arr, dtype=object)
        out = np.empty(arr.shape + (self.m,), dtype=object)
        for idx in np.ndindex(arr.shape):
            for l in range(self.m):
                out[idx + (l,)] = sp.diff(arr[idx], self.x[l])
        return out

    def cov(self, t, pull=False) -> np.ndarray:
        t = np.asarray(t, dtype=object)
        out = self.d(t)
        gam = self.christoffel
        first = 1 if pull else 0
        for idx in np.ndindex(out.shape):
            *rest, l = idx
            acc = out[idx]
            for s in range(first, len(rest)):
                for q in range(self.m):
                    j = list(rest)
                    j[s] = q
                    acc -= gam[q, l, rest[s]] * t[tuple(j)]
            if pull:
                a = rest[0]
                for b in range(self.n):
                    conn = sum(self.tgam[a, b, c] * self.dphi[c, l] for c in range(self.n))
                    acc += conn * t[(b,) + tuple(rest[1:])]
            out[idx] = acc
        return out

    def trace(self, t, a=0, b=1) -> np.ndarray:
        t = np.asarray(t, dtype=object)
        ginv = np.array(self.ginv.tolist(), dtype=object)
        moved = np.moveaxis(t, (a, b), (0, 1))
        return np.einsum("ij,ij...->...", ginv, moved)

    @property
    def gm(self) -> np.ndarray:
        return np.array(self.g.tolist(), dtype=object)

    # -- base geometry --------------------------------------------------------

    @cached_property
    def christoffel(self) -> np.ndarray:
        m, g, gi, x = self.m, self.g, self.ginv, self.x
        out = np.empty((m, m, m), dtype=object)
        for k, i, j in itertools.product(range(m), repeat=3):
            out[k, i, j] = sum(gi[k, l] * (sp.diff(g[j, l], x[i]) + sp.diff(g[i, l], x[j]) - sp.diff(g[i, j], x[l]))
                               for l in range(m)) / 2
        return out

    @cached_property
    def riemann(self) -> np.ndarray:
        m, gam, x = self.m, self.christoffel, self.x
        up = np.empty((m,) * 4, dtype=object)
        for p, j, k, l in itertools.product(range(m), repeat=4):
            up[p, j, k, l] = (sp.diff(gam[p, l, j], x[k]) - sp.diff(gam[p, k, j], x[l])
                              + sum(gam[p, k, q] * gam[q, l, j] - gam[p, l, q] * gam[q, k, j] for q in range(m)))
        return np.einsum("ip,pjkl->ijkl", self.gm, up)

    @cached_property
    def ricci(self) -> np.ndarray:
        return self.trace(self.riemann, 0, 2)

    # -- map ---------------------------------------------------------------

    @cached_property
    def dphi(self) -> np.ndarray:
        return np.array([[sp.diff(c, xi) for xi in self.x] for c in self.phi], dtype=object)

    @cached_property
    def second_fundamental(self) -> np.ndarray:
        return self.cov(self.dphi, pull=True)

    @cached_property
    def tension(self) -> np.ndarray:
        return self.trace(self.second_fundamental, 1, 2)

    @cached_property
    def pullback(self) -> np.ndarray:
        h = np.array(self.h.tolist(), dtype=object)
        return np.einsum("ab,ai,bj->ij", h, self.dphi, self.dphi)

    @cached_property
    def bitension(self) -> np.ndarray:
        lap = self.trace(self.cov(self.cov(self.tension, pull=True), pull=True), 1, 2)
        dd = self.trace(np.einsum("bi,cj->bcij", self.dphi, self.dphi), 2, 3)
        curv = np.einsum("abcd,bc,d->a", self.triem, dd, self.tension)
        return lap - curv

    # -- φ-curvatures ----------------------------------------------------------

    @cached_property
    def phi_ricci(self) -> np.ndarray:
        return self.ricci - self.alpha * self.pullback

    @cached_property
    def phi_scalar(self):
        return self.trace(self.phi_ricci)

    @cached_property
    def schouten(self) -> np.ndarray:
        return self.phi_ricci - self.phi_scalar / (2 * (self.m - 1)) * self.gm

    @cached_property
    def cotton(self) -> np.ndarray:
        d = self.cov(self.schouten)
        return d - d.swapaxes(1, 2)

    @cached_property
    def weyl(self) -> np.ndarray:
        a, g = self.schouten, self.gm
        kn = (np.einsum("ik,jl->ijkl", a, g) - np.einsum("il,jk->ijkl", a, g)
              + np.einsum("jl,ik->ijkl", a, g) - np.einsum("jk,il->ijkl", a, g))
        return self.riemann - kn / (self.m - 2)

    @cached_property
    def bach(self) -> np.ndarray:
        """B^φ from its defining formula."""
        m, a = self.m, self.alpha
        h = np.array(self.h.tolist(), dtype=object)
        div_c = self.trace(self.cov(self.cotton), 2, 3)
        ric_up = np.einsum("ip,jq,pq->ij", np.array(self.ginv.tolist(), dtype=object),
                           np.array(self.ginv.tolist(), dtype=object), self.phi_ricci)
        w_part = np.einsum("tk,tikj->ij", ric_up, self.weyl)
        pull_part = np.einsum("tk,ti,jk->ij", ric_up, self.pullback, self.gm)
        tau = self.tension
        hess_tau = np.einsum("ab,aij,b->ij", h, self.second_fundamental, tau)
        dtau = self.cov(tau, pull=True)
        dphi_dtau = np.einsum("ab,ai,bj->ij", h, self.dphi, dtau)
        tau_sq = sum(h[a_, b_] * tau[a_] * tau[b_] for a_ in range(self.n) for b_ in range(self.n))
        total = div_c + w_part - a * pull_part + a * hess_tau - a * dphi_dtau - a * tau_sq / (m - 2) * self.gm
        return total / (m - 2)

    @cached_property
    def ricci_up(self) -> np.ndarray:
        gi = np.array(self.ginv.tolist(), dtype=object)
        return np.einsum("ip,jq,pq->ij", gi, gi, self.phi_ricci)

    @cached_property
    def j_field(self) -> np.ndarray:
        m = self.m
        gi = np.array(self.ginv.tolist(), dtype=object)
        h = np.array(self.h.tolist(), dtype=object)
        s, tau, dphi = self.phi_scalar, self.tension, self.dphi
        grad_s = gi @ self.d(np.array(s, dtype=object))
        tau_d = gi @ np.einsum("ab,a,bi->i", h, tau, dphi)
        return (m / ((m - 1) * (m - 2)) * s * tau
                - (m - 2) / (2 * (m - 1)) * dphi @ grad_s
                - 2 * np.einsum("ij,aij->a", self.ricci_up, self.second_fundamental)
                + 2 * dphi @ tau_d
                - self.bitension)

    @cached_property
    def d_tensor(self) -> np.ndarray:
        m, g, ric, s = self.m, self.gm, self.phi_ricci, self.phi_scalar
        gi = np.array(self.ginv.tolist(), dtype=object)
        df = self.d(np.array(self.f, dtype=object))
        f_ric = (gi @ df) @ ric
        first = np.einsum("ij,k->ijk", ric, df)
        second = np.einsum("k,ij->ijk", f_ric, g)
        third = s * np.einsum("k,ij->ijk", df, g)
        anti = [t - t.swapaxes(1, 2) for t in (first, second, third)]
        return (anti[0] + anti[1] / (m - 1) - anti[2] / (m - 1)) / (m - 2)
