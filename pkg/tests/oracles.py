"""Slow reference implementations used only by the tests."""

import itertools
import math

import numpy as np


def exchange_sq_loops(space, f, plus=False):
    """Squared exchange operator by explicit loops over ordered pairs (i, j)."""
    pts = [tuple(int(v) for v in p) for p in space.points]
    where = {p: k for k, p in enumerate(pts)}
    n = space.dim
    ordered = space.kind == "sn"
    out = np.zeros(len(pts))
    for k, p in enumerate(pts):
        tot = 0.0
        for i in range(n):
            for j in range(n):
                if not ordered and j <= i:
                    continue
                q = list(p)
                q[i], q[j] = q[j], q[i]
                d = f[k] - f[where[tuple(q)]]
                if plus:
                    d = max(d, 0.0)
                tot += d * d
        out[k] = tot / n if ordered else 2.0 * tot / n
    return out


def product_ops_loops(space, weights, f):
    """(|d f|^2, |d+ f|^2, |h f|^2, |h+ f|^2) by loops, for a product measure given by weights."""
    pts = [tuple(int(v) for v in p) for p in space.points]
    where = {p: k for k, p in enumerate(pts)}
    out = np.zeros((4, len(pts)))
    for k, p in enumerate(pts):
        for i, size in enumerate(space.radix):
            fib = []
            for a in range(size):
                q = list(p)
                q[i] = a
                fib.append(where[tuple(q)])
            mass = np.array([weights[m] for m in fib])
            cond = mass / mass.sum()
            vals = np.array([f[m] for m in fib])
            live = vals[mass > 0]
            out[0, k] += sum(c * (f[k] - v) ** 2 for c, v in zip(cond, vals))
            out[1, k] += sum(c * max(f[k] - v, 0.0) ** 2 for c, v in zip(cond, vals))
            out[2, k] += (live.max() - live.min()) ** 2
            out[3, k] += max(f[k] - live.min(), 0.0) ** 2
    return out


def second_difference_loops(space, f, i, j, k):
    """sup over a, a', b, b' of |f(a,b) - f(a',b) - f(a,b') + f(a',b')| at point k (coords i, j)."""
    p = list(int(v) for v in space.points[k])
    pts = {tuple(int(v) for v in q): m for m, q in enumerate(space.points)}

    def at(a, b):
        q = list(p)
        q[i], q[j] = a, b
        return f[pts[tuple(q)]]

    best = 0.0
    for a, a2 in itertools.product(range(space.radix[i]), repeat=2):
        for b, b2 in itertools.product(range(space.radix[j]), repeat=2):
            best = max(best, abs(at(a, b) - at(a2, b) - at(a, b2) + at(a2, b2)))
    return best


def entropy_loops(w, f):
    g = [math.exp(v) for v in f]
    m = sum(a * b for a, b in zip(w, g))
    return sum(a * b * v for a, b, v in zip(w, g, f)) - m * math.log(m)


def kendall_inversions(seq):
    return sum(1 for a in range(len(seq)) for b in range(a + 1, len(seq)) if seq[a] > seq[b])
