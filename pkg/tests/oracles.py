"""Reference implementations that share no code with the package.

Everything here is written from the definitions with explicit loops or
closed forms so the tests compare two independent computations.
"""

import math

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.optimize


def midpoint_nodes_1d(pieces, n):
    """Cells of equal length inside each piece, ``n`` in total split by length."""
    total = sum(b - a for a, b in pieces)
    xs, ws = [], []
    for a, b in pieces:
        m = max(1, round((b - a) * n / total))
        h = (b - a) / m
        for k in range(m):
            xs.append(a + (k + 0.5) * h)
            ws.append(h)
    return np.array(xs), np.array(ws)


def dist_1d(pieces, x):
    for a, b in pieces:
        if a < x < b:
            return min(x - a, b - x)
    raise ValueError("outside")


def tail_1d(pieces, x, sp):
    """Integral of ``|x-y|^-(1+sp)`` over the complement, from antiderivatives."""

    def left(c, d):  # y in (c, d), d <= x
        return ((x - d) ** -sp - (x - c) ** -sp if c > -math.inf else (x - d) ** -sp) / sp

    def right(c, d):  # y in (c, d), c >= x
        return ((c - x) ** -sp - (d - x) ** -sp if d < math.inf else (c - x) ** -sp) / sp

    gaps = [(-math.inf, pieces[0][0])]
    gaps += [(p[1], q[0]) for p, q in zip(pieces, pieces[1:]) if q[0] > p[1]]
    gaps.append((pieces[-1][1], math.inf))
    total = 0.0
    for c, d in gaps:
        total += left(c, d) if d <= x else right(c, d)
    return total


class Assembly1D:
    """Dense discrete forms on a union of intervals."""

    def __init__(self, pieces, s, p, n):
        self.pieces, self.s, self.p = pieces, s, p
        self.sp = s * p
        self.x, self.w = midpoint_nodes_1d(pieces, n)
        m = len(self.x)
        self.d = np.array([dist_1d(pieces, xi) for xi in self.x])
        self.rho = np.array([tail_1d(pieces, xi, self.sp) for xi in self.x])
        self.K = np.zeros((m, m))
        for i in range(m):
            for j in range(m):
                if i != j:
                    self.K[i, j] = self.w[i] * self.w[j] / abs(self.x[i] - self.x[j]) ** (1 + self.sp)

    def J(self, t):
        return np.sign(t) * np.abs(t) ** (self.p - 1)

    def seminorm(self, u):
        diff = np.abs(u[:, None] - u[None, :]) ** self.p
        return float((self.K * diff).sum() + 2 * (self.w * self.rho * np.abs(u) ** self.p).sum())

    def weighted(self, u):
        return float((self.w * np.abs(u) ** self.p / self.d**self.sp).sum())

    def quotient(self, u):
        return self.seminorm(u) / self.weighted(u)

    def seminorm_grad(self, u):
        jd = self.J(u[:, None] - u[None, :])
        return 2 * self.p * ((self.K * jd).sum(axis=1) + self.w * self.rho * self.J(u))

    def weighted_grad(self, u):
        return self.p * self.w * self.J(u) / self.d**self.sp

    def stiffness(self):
        """``A`` with ``u^T A u`` the p = 2 seminorm."""
        return 2 * (np.diag(self.K.sum(axis=1) + self.w * self.rho) - self.K)

    def mass(self):
        return np.diag(self.w / self.d**self.sp)

    def eigenpair(self):
        vals, vecs = scipy.linalg.eigh(self.stiffness(), self.mass())
        v = vecs[:, 0]
        return float(vals[0]), v * np.sign(v.sum())


def quotient_min_oracle(asm, restarts, seed):
    """Smallest quotient found by bound-constrained L-BFGS (u >= 0) from random starts."""
    rng = np.random.default_rng(seed)
    m = len(asm.x)

    def fun(u):
        S, D = asm.seminorm(u), asm.weighted(u)
        g = (asm.seminorm_grad(u) * D - S * asm.weighted_grad(u)) / D**2
        return S / D, g

    best = math.inf
    for _ in range(restarts):
        u0 = rng.uniform(0.01, 1.0, m)
        res = scipy.optimize.minimize(fun, u0, jac=True, method="L-BFGS-B",
                                      bounds=[(1e-12, None)] * m, options={"maxiter": 500})
        best = min(best, float(res.fun))
    return best


def rectangle_distance_integral(lx, ly, alpha):
    """Integral of ``d^-alpha`` over an ``lx`` by ``ly`` rectangle (alpha < 1),
    from the level-set perimeter ``2(lx+ly) - 8t`` for ``t < min(lx,ly)/2``."""
    r = min(lx, ly) / 2
    return 2 * (lx + ly) * r ** (1 - alpha) / (1 - alpha) - 8 * r ** (2 - alpha) / (2 - alpha)


def intervals_distance_integral(pieces, alpha):
    return sum(2 * ((b - a) / 2) ** (1 - alpha) / (1 - alpha) for a, b in pieces)


def tail_rectangle(sides, x, sp):
    """Exterior tail of a rectangle in polar coordinates around ``x``:
    the radial integral gives ``R(theta)^-sp / sp`` with ``R`` the exit distance."""
    (a1, b1), (a2, b2) = sides
    px, py = x

    def exit_radius(theta):
        c, s = math.cos(theta), math.sin(theta)
        rs = []
        if c > 0:
            rs.append((b1 - px) / c)
        elif c < 0:
            rs.append((a1 - px) / c)
        if s > 0:
            rs.append((b2 - py) / s)
        elif s < 0:
            rs.append((a2 - py) / s)
        return min(rs)

    angles = sorted(math.atan2(cy - py, cx - px) % (2 * math.pi) for cx in (a1, b1) for cy in (a2, b2))
    edges = [0.0, *angles, 2 * math.pi]
    return sum(
        scipy.integrate.quad(lambda t: exit_radius(t) ** -sp / sp, lo, hi, epsabs=0, epsrel=1e-12)[0]
        for lo, hi in zip(edges, edges[1:])
        if hi > lo
    )
