"""Independent oracles used by the test suite.

Each oracle recomputes a quantity along a path disjoint from the library
implementation: adaptive Runge-Kutta for flows, composite Simpson quadrature
for Gramians, explicit word enumeration for reachable spans, and a frequency
sweep for unswitched H-infinity norms.
"""

import numpy as np
from scipy.integrate import solve_ivp


def rk_flow(sys, sig, s, t, x0, rtol=1e-10, atol=1e-12):
    """Integrate xdot = A(sigma(t)) x from s to t with an adaptive solver."""

    def rhs(tt, x):
        return sys.A(sig.mode_at(min(tt, sig.horizon - 1e-12))) @ x

    # break at switch times so the solver never smooths over a discontinuity
    breaks = [b for b in np.cumsum([d for _, d in sig.segments])[:-1] if s < b < t]
    pts = [s] + breaks + [t]
    x = np.asarray(x0, dtype=float)
    for a, b in zip(pts[:-1], pts[1:]):
        sol = solve_ivp(rhs, (a, b), x, rtol=rtol, atol=atol, method="RK45")
        x = sol.y[:, -1]
    return x


def simpson_gramians(sys, sig, t0, t1, n_panels=2000):
    """Defining Gramian integrals by composite Simpson per segment."""
    from switchgain.flows import transition

    n = sys.n
    wc = np.zeros((n, n))
    wo = np.zeros((n, n))
    edges = np.concatenate([[0.0], np.cumsum([d for _, d in sig.segments])])
    cuts = sorted(set([t0, t1] + [float(e) for e in edges if t0 < e < t1]))
    for a, b in zip(cuts[:-1], cuts[1:]):
        ss = np.linspace(a, b, 2 * n_panels + 1)
        h = ss[1] - ss[0]
        i = sig.mode_at(0.5 * (a + b))  # mode is constant on (a, b)
        B, C = sys.B(i), sys.C(i)
        fc = []
        fo = []
        for sv in ss:
            phi_back = transition(sys, sig, t0, sv)       # Phi(s, t0)
            phi_fwd = np.linalg.inv(phi_back)             # Phi(t0, s)
            fc.append(phi_fwd @ B @ B.T @ phi_fwd.T)
            fo.append(phi_back.T @ C.T @ C @ phi_back)
        fc = np.array(fc)
        fo = np.array(fo)
        for f, acc in ((fc, wc), (fo, wo)):
            acc += h / 3.0 * (f[0] + f[-1] + 4.0 * f[1:-1:2].sum(axis=0)
                              + 2.0 * f[2:-2:2].sum(axis=0))
    return wc, wo


def word_span_dimension(sys, max_depth=None):
    """Dimension of span{A_{i1}...A_{ik} B columns} by explicit enumeration."""
    n = sys.n
    if n == 0:
        return 0
    depth = max_depth if max_depth is not None else n
    levels = [np.hstack([m.B for m in sys.modes])]
    stacked = levels[0]
    rank = np.linalg.matrix_rank(stacked, tol=1e-9 * max(1.0, np.linalg.norm(stacked, 2)))
    for _ in range(depth):
        nxt = np.hstack([m.A @ levels[-1] for m in sys.modes])
        levels.append(nxt)
        stacked = np.hstack([stacked, nxt])
        r2 = np.linalg.matrix_rank(stacked, tol=1e-9 * max(1.0, np.linalg.norm(stacked, 2)))
        if r2 == rank:
            return rank
        rank = r2
    return rank


def hinf_norm(A, B, C, n_sweep=4000):
    """H-infinity norm of C (sI - A)^-1 B by frequency sweep plus refinement."""
    n = A.shape[0]
    scale = max(np.abs(np.linalg.eigvals(A)).max(), 1.0)
    omegas = np.concatenate([[0.0], np.logspace(-4, 4, n_sweep) * scale])

    def g(w):
        return np.linalg.norm(C @ np.linalg.solve(1j * w * np.eye(n) - A, B), 2)

    vals = np.array([g(w) for w in omegas])
    k = int(np.argmax(vals))
    lo = omegas[max(k - 1, 0)]
    hi = omegas[min(k + 1, len(omegas) - 1)]
    gr = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - gr * (b - a), a + gr * (b - a)
    for _ in range(80):
        if g(c) > g(d):
            b = d
        else:
            a = c
        c, d = b - gr * (b - a), a + gr * (b - a)
    return max(vals[k], g(0.5 * (a + b)))


def commuting_pair_rate(d1, d2, n_grid=2001):
    """Worst growth rate over duration allocations for commuting diagonal modes."""
    lams = np.linspace(0.0, 1.0, n_grid)
    best = -np.inf
    for lam in lams:
        rate = np.max(lam * np.asarray(d1) + (1.0 - lam) * np.asarray(d2))
        best = max(best, rate)
    return best
