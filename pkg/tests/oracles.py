"""Independent scalar re-implementations used to derive frozen test values.

Pure Python (math/statistics only), loop-based, written from the
definitions in factored form. They share no code with the package.
"""

import math
import random
import statistics

# 12-ligand toy set, two algorithms, no ties.
TOY_ACTIVITY = [1, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 0]
TOY_S1 = [0.9, 0.8, 0.75, 0.3, 0.5, 0.6, 0.2, 0.1, 0.85, 0.4, 0.35, 0.05]
TOY_S2 = [0.7, 0.9, 0.2, 0.6, 0.1, 0.8, 0.3, 0.4, 0.65, 0.5, 0.05, 0.15]


def _toy40():
    rng = random.Random(20240607)
    x, s1, s2 = [], [], []
    for i in range(40):
        a = 1 if i % 4 == 0 else 0
        u = rng.gauss(0.0, 1.0)
        v = 0.7 * u + 0.71 * rng.gauss(0.0, 1.0)
        x.append(a)
        s1.append(round(u + 1.2 * a, 6))
        s2.append(round(v + 0.8 * a, 6))
    return x, s1, s2


# 40-ligand toy set: 10 actives, correlated scores.
TOY40_ACTIVITY, TOY40_S1, TOY40_S2 = _toy40()


def ecdf(scores, t):
    return sum(1 for s in scores if s <= t) / len(scores)


def threshold(scores, r):
    """min{t : F(t) >= 1 - r} over observed scores; None when every ligand is tested."""
    if 1 - r <= 1e-12:
        return None
    return min(t for t in scores if ecdf(scores, t) >= 1 - r - 1e-12)


def tested(scores, r):
    t = threshold(scores, r)
    return [True] * len(scores) if t is None else [s > t for s in scores]


def counts(x, s1, s2, r1, r2):
    t1, t2 = tested(s1, r1), tested(s2, r2)
    q1 = sum(1 for i in range(len(x)) if x[i] and t1[i])
    q2 = sum(1 for i in range(len(x)) if x[i] and t2[i])
    q12 = sum(1 for i in range(len(x)) if x[i] and t1[i] and t2[i])
    g = sum(1 for i in range(len(x)) if t1[i] and t2[i]) / len(x)
    return q1, q2, q12, sum(x), g, sum(t1) / len(x), sum(t2) / len(x)


def bandwidth(scores):
    return 1.06 * statistics.stdev(scores) * len(scores) ** (-0.2)


def nw(scores, x, t):
    h = bandwidth(scores)
    num = den = 0.0
    for s, a in zip(scores, x):
        w = math.exp(-0.5 * ((s - t) / h) ** 2)
        num += w * a
        den += w
    return min(max(num / den, 0.0), 1.0)


def lam(scores, x, r):
    return nw(scores, x, threshold(scores, r))


def var_b(theta, n, pi):
    return theta * (1 - theta) / (n * pi)


def var_jz(theta, L, r, n, pi):
    return var_b(theta, n, pi) * (1 - 2 * L + L * L * r * (1 - r) / (pi * theta * (1 - theta)))


def cov_b(t1, t2, t12, n, pi):
    return (t12 - t1 * t2) / (n * pi)


def cov_emproc(t1, t2, t12, g, L1, L2, r1, r2, n, pi):
    cb = cov_b(t1, t2, t12, n, pi)
    return cb * ((1 - L1 - L2) + (g - r1 * r2) * L1 * L2 / (pi * (t12 - t1 * t2)))


def emproc_compare(x, s1, s2, r):
    n = len(x)
    q1, q2, q12, npl, g, r1, r2 = counts(x, s1, s2, r, r)
    pi = npl / n
    t1, t2, t12 = q1 / npl, q2 / npl, q12 / npl
    L1, L2 = lam(s1, x, r), lam(s2, x, r)
    v = var_jz(t1, L1, r, n, pi) + var_jz(t2, L2, r, n, pi) - 2 * cov_emproc(t1, t2, t12, g, L1, L2, r, r, n, pi)
    se = math.sqrt(v)
    z = (t1 - t2) / se
    p = math.erfc(abs(z) / math.sqrt(2))
    return {"diff": t1 - t2, "se": se, "z": z, "p": p, "lam": (L1, L2), "counts": (q1, q2, q12, npl, g)}


def cov6(ti, tj, Li, Lj, ri, rj, n, pi):
    """Single-curve covariance between fractions ri < rj, factored form."""
    base = ti * (1 - tj) / (n * pi)
    return base * ((1 - Li - Lj) + ri * (1 - rj) * Li * Lj / (pi * ti * (1 - tj)))


def cov8(t1i, t2j, t12, g, L1, L2, ri, rj, n, pi):
    """Algorithm 1 at ri with algorithm 2 at rj, factored form."""
    cb = (t12 - t1i * t2j) / (n * pi)
    return cb * ((1 - L1 - L2) + (g - ri * rj) * L1 * L2 / (pi * (t12 - t1i * t2j)))


def single_cov_matrix(x, s, rs):
    n, npl = len(x), sum(x)
    pi = npl / n
    th = [sum(1 for a, t in zip(x, tested(s, r)) if a and t) / npl for r in rs]
    L = [lam(s, x, r) for r in rs]
    k = len(rs)
    m = [[0.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            a, b = min(i, j), max(i, j)
            m[i][j] = cov6(th[a], th[b], L[a], L[b], rs[a], rs[b], n, pi)
    return m


def diff_cov_matrix(x, s1, s2, rs):
    n, npl = len(x), sum(x)
    pi = npl / n
    k = len(rs)
    th1 = [sum(1 for a, t in zip(x, tested(s1, r)) if a and t) / npl for r in rs]
    th2 = [sum(1 for a, t in zip(x, tested(s2, r)) if a and t) / npl for r in rs]
    L1 = [lam(s1, x, r) for r in rs]
    L2 = [lam(s2, x, r) for r in rs]

    def cross(i, j):
        q1, q2, q12, _, g, _, _ = counts(x, s1, s2, rs[i], rs[j])
        return cov8(th1[i], th2[j], q12 / npl, g, L1[i], L2[j], rs[i], rs[j], n, pi)

    m = [[0.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            a, b = min(i, j), max(i, j)
            c1 = cov6(th1[a], th1[b], L1[a], L1[b], rs[a], rs[b], n, pi)
            c2 = cov6(th2[a], th2[b], L2[a], L2[b], rs[a], rs[b], n, pi)
            m[i][j] = c1 + c2 - cross(i, j) - cross(j, i)
    return m
