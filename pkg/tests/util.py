"""Shared naive oracles for the test suite. Everything here is written the
dumb way on purpose: direct monomial loops, stepwise derivatives, raw
factorials. The library must agree with these, not the other way round."""

import math

import numpy as np

from taylorlab.poly import Poly


def random_poly(rng, r, d, max_deg=6, nterms=8, scale=1.0):
    """Random sparse polynomial with exponents bounded per coordinate."""
    terms = {}
    for _ in range(nterms):
        we = tuple(int(rng.integers(0, max_deg + 1)) for _ in range(r))
        ze = tuple(int(rng.integers(0, max_deg + 1)) for _ in range(d))
        c = complex(rng.standard_normal(), rng.standard_normal()) * scale
        terms[(we, ze)] = terms.get((we, ze), 0j) + c
    return Poly(r, d, terms)


def random_point(rng, n, radius=1.0):
    return tuple(complex(rng.uniform(-radius, radius), rng.uniform(-radius, radius))
                 for _ in range(n))


def oracle_eval(p, w, z):
    """Monomial-by-monomial evaluation with bare ** powers."""
    total = 0j
    for (we, ze), c in p.terms.items():
        v = c
        for x, e in zip(w, we):
            v *= complex(x) ** e
        for x, e in zip(z, ze):
            v *= complex(x) ** e
        total += v
    return total


def oracle_diff_once(terms, coord, arity):
    """One partial derivative applied to a raw term list."""
    out = {}
    for (we, ze), c in terms.items():
        joint = list(we) + list(ze)
        if joint[coord] == 0:
            continue
        factor = joint[coord]
        joint[coord] -= 1
        key = (tuple(joint[:len(we)]), tuple(joint[len(we):]))
        out[key] = out.get(key, 0j) + c * factor
    return out


def oracle_gamma(f, w, zeta, m):
    """Taylor coefficient via stepwise derivatives and raw factorials."""
    terms = dict(f.terms)
    for i, order in enumerate(m):
        for _ in range(order):
            terms = oracle_diff_once(terms, f.r + i, f.r + f.d)
    value = 0j
    for (we, ze), c in terms.items():
        v = c
        for x, e in zip(w, we):
            v *= complex(x) ** e
        for x, e in zip(zeta, ze):
            v *= complex(x) ** e
        value += v
    denom = 1
    for order in m:
        denom *= math.factorial(order)
    return value / denom


def oracle_partial_sum_value(f, w, zeta, z, n, enum):
    """S_n(f, w, zeta)(z) summed term by term from naive Taylor coefficients."""
    total = 0j
    for k in range(n + 1):
        mk = enum.unrank(k)
        g = oracle_gamma(f, w, zeta, mk)
        v = g
        for x, c0, e in zip(z, zeta, mk):
            v *= (complex(x) - complex(c0)) ** e
        total += v
    return total


def fd_derivative(fn, x, h=1e-5):
    """Central difference along one complex coordinate of a callable C -> C."""
    return (fn(x + h) - fn(x - h)) / (2 * h)


def rel_err(a, b):
    denom = max(abs(a), abs(b), 1e-30)
    return abs(a - b) / denom
