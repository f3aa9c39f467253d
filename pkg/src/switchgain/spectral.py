"""Constrained generalized spectral radius over dwell-time switching classes.

Lower bounds come from periodic words: every word whose dwells (including the
first and last letter) respect the class minimum repeats into a class-valid
signal, so spectral_radius(flow)^(1/duration) is a rigorous lower bound, and
single-letter words give e^(spectral abscissa) exactly.  Upper bounds come
from a polytope-norm certificate: a finite set of scaled semigroup products
defines v(x) = max(|x|, max_j |S_j x|); once every letter of a duration grid
contracts v at rate mu_c per unit time, so does every product of letters.
Off-grid durations are covered by a reported multiplicative grid inflation
exp(a_max * delta), and dwells beyond the grid cap by per-mode eigenvalue
envelopes; failures of either closure are flagged, never silently absorbed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import expm

from .core import Signal, SignalClassSpec, SystemSpec

__all__ = [
    "Word",
    "RhoEstimate",
    "PolytopeNorm",
    "RhoCurve",
    "QuasiExtremalReport",
    "word_flow",
    "word_to_signal",
    "concat_words",
    "rho_lower",
    "rho_upper",
    "rho_estimate",
    "extremal_norm",
    "quasi_extremal_trajectory",
    "rho_curve",
]

_PSD_TOL = 1e-10


def class_tau(cls: SignalClassSpec, *, for_upper: bool = False) -> float:
    """Dwell floor used by the word machinery for a class.

    arbitrary -> 0, dwell -> tau.  avg_dwell routes through dwell machinery:
    its words searched with dwell tau are class-valid (lower side), while the
    upper side must cover the whole piecewise-constant superclass (tau 0)
    unless N0 = 1, in which case the classes coincide.  pers_exc and the
    Lipschitz/BV classes are not supported here.
    """
    if cls.kind == "arbitrary":
        return 0.0
    if cls.kind == "dwell":
        return cls.tau
    if cls.kind == "avg_dwell":
        if cls.n0 == 1:
            return cls.tau
        return 0.0 if for_upper else cls.tau
    raise ValueError(f"class kind {cls.kind!r} is not supported by the spectral machinery")


@dataclass(frozen=True)
class Word:
    """Semigroup element: finite (mode, duration) sequence with boundary dwells."""

    letters: tuple[tuple[int, float], ...]

    def __post_init__(self):
        for i, d in self.letters:
            if d <= 0:
                raise ValueError("letter durations must be positive")

    @property
    def total_time(self):
        return sum(d for _, d in self.letters)

    @property
    def first_dwell(self):
        return self.letters[0][1] if self.letters else 0.0

    @property
    def last_dwell(self):
        return self.letters[-1][1] if self.letters else 0.0

    def valid_for(self, tau):
        return all(d >= tau - 1e-12 for _, d in self.letters)


def concat_words(w1: Word, w2: Word) -> Word:
    """w1 followed by w2 (merging an equal-mode junction into one dwell)."""
    if not w1.letters:
        return w2
    if not w2.letters:
        return w1
    a, b = list(w1.letters), list(w2.letters)
    if a[-1][0] == b[0][0]:
        a[-1] = (a[-1][0], a[-1][1] + b[0][1])
        b = b[1:]
    return Word(tuple(a) + tuple(b))


def word_to_signal(word: Word) -> Signal:
    return Signal(word.letters)


def word_flow(sys: SystemSpec, word: Word):
    """(flow matrix, total duration) of the word; empty word gives identity."""
    phi = np.eye(sys.n)
    for i, d in word.letters:
        phi = expm(sys.A(i) * d) @ phi
    return phi, word.total_time


@dataclass(frozen=True, eq=False)
class RhoEstimate:
    tau: float
    lower: float
    upper: float
    witness: Word | None
    generator_grid: tuple[float, ...]
    inflation: float
    flags: tuple[str, ...] = ()
    delta: float | None = None
    cap: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper + 1e-12):
            raise ValueError(f"invalid estimate bounds [{self.lower}, {self.upper}]")

    @property
    def lyapunov_exponent_lower(self):
        return math.log(self.lower) if self.lower > 0 else -math.inf

    @property
    def lyapunov_exponent_upper(self):
        return math.log(self.upper) if math.isfinite(self.upper) else math.inf

    def to_dict(self):
        return {
            "tau": self.tau,
            "lower": self.lower,
            "upper": self.upper if math.isfinite(self.upper) else None,
            "witness": {"letters": [[i, d] for i, d in self.witness.letters]}
            if self.witness
            else None,
            "inflation": self.inflation,
            "flags": list(self.flags),
        }


@dataclass(frozen=True, eq=False)
class PolytopeNorm:
    """max of |x| and |S_j x| over stored scaled products S_j = mu^-t R_t.

    scaled[0] is the identity; raw generators are scaled[j] / scales[j].
    """

    scaled: np.ndarray           # (N, n, n)
    times: np.ndarray            # (N,)
    mu: float
    stabilized: bool
    flags: tuple[str, ...] = ()

    @property
    def scales(self):
        return self.mu ** (-self.times)

    def generators(self):
        return [(self.scaled[j] / self.scales[j], float(self.times[j]), float(self.scales[j]))
                for j in range(len(self.times))]

    def evaluate(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        return float(np.max(np.linalg.norm(self.scaled @ x, axis=1)))

    __call__ = evaluate


def _spectral_radius(M):
    return float(np.max(np.abs(np.linalg.eigvals(M)))) if M.size else 0.0


def _spectral_abscissa(A):
    return float(np.max(np.real(np.linalg.eigvals(A)))) if A.size else -math.inf


def _mode_exponentials(A, ts):
    """e^{A t} for every t in ts; eigendecomposition fast path when stable."""
    ts = np.asarray(ts, dtype=float)
    n = A.shape[0]
    if n == 0:
        return np.zeros((len(ts), 0, 0))
    try:
        w, V = np.linalg.eig(A)
        cond = np.linalg.cond(V)
    except np.linalg.LinAlgError:
        cond = np.inf
    if np.isfinite(cond) and cond < 1e8:
        Vi = np.linalg.inv(V)
        E = np.einsum("ij,tj,jk->tik", V, np.exp(np.outer(ts, w)), Vi)
        return np.ascontiguousarray(E.real)
    return np.stack([expm(A * t) for t in ts])


# ---------------------------------------------------------------------------
# lower bound: periodic-word search


def _mode_sequences(n_modes, max_letters):
    """Cyclic words without adjacent repeats, one representative per rotation."""
    out = []
    for k in range(2, max_letters + 1):
        for seq in itertools.product(range(n_modes), repeat=k):
            if any(seq[i] == seq[(i + 1) % k] for i in range(k)):
                continue
            rotations = [seq[i:] + seq[:i] for i in range(k)]
            if seq != min(rotations):
                continue
            if any(k % d == 0 and seq == seq[:d] * (k // d) for d in range(1, k)):
                continue
            out.append(seq)
    return out


def _word_value(mats, ts):
    phi = mats[0]
    for M in mats[1:]:
        phi = M @ phi
    total = sum(ts)
    sr = _spectral_radius(phi)
    if sr <= 0.0:
        return 0.0
    return sr ** (1.0 / total)


def _golden_refine(f, x0, lo, hi, iters=60):
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - gr * (b - a), a + gr * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def default_duration_grid(tau):
    if tau > 0:
        return tuple(tau * m for m in (1.0, 1.25, 1.6, 2.0, 3.0, 5.0))
    return (0.05, 0.1, 0.2, 0.4, 0.8, 1.5, 3.0)


def rho_lower(
    sys: SystemSpec,
    cls: SignalClassSpec,
    *,
    max_letters: int = 4,
    duration_grid=None,
    refine_iters: int = 2,
    refine: bool = True,
) -> RhoEstimate:
    """Rigorous lower bound on the constrained generalized spectral radius.

    Maximizes over (a) single-mode candidates e^(abscissa) and (b) periodic
    words with grid durations, coordinate-descent over the grid and then a
    continuous refinement of the best word's durations (respecting the dwell
    floor).  The witness word repeats into a class-valid signal.
    """
    tau = class_tau(cls)
    grid = tuple(duration_grid) if duration_grid else default_duration_grid(tau)
    grid = tuple(g for g in grid if g >= max(tau, 1e-9) - 1e-12)
    if not grid:
        raise ValueError("empty duration grid after applying the dwell floor")

    best_val, best_word = -1.0, None
    for k, mode in enumerate(sys.modes):
        val = math.exp(_spectral_abscissa(mode.A))
        if val > best_val:
            best_val = val
            best_word = Word(((k, max(tau, grid[0])),))

    cache = {}
    for k in range(sys.n_modes):
        E = _mode_exponentials(sys.A(k), grid)
        for gi, g in enumerate(grid):
            cache[(k, g)] = E[gi]

    for seq in _mode_sequences(sys.n_modes, max_letters):
        k = len(seq)
        starts = [(grid[0],) * k, (grid[len(grid) // 2],) * k, (grid[-1],) * k]
        for ts0 in starts:
            ts = list(ts0)
            val = _word_value([cache[(i, t)] for i, t in zip(seq, ts)], ts)
            for _ in range(max(refine_iters, 1) + 1):
                changed = False
                for pos in range(k):
                    for g in grid:
                        if g == ts[pos]:
                            continue
                        trial = list(ts)
                        trial[pos] = g
                        v = _word_value([cache[(i, t)] for i, t in zip(seq, trial)], trial)
                        if v > val + 1e-15:
                            val, ts, changed = v, trial, True
                if not changed:
                    break
            if val > best_val:
                best_val = val
                best_word = Word(tuple(zip(seq, ts)))

    if refine and best_word is not None and len(best_word.letters) >= 2:
        letters = list(best_word.letters)
        lo = max(tau, 1e-3)
        for _ in range(2):
            for pos in range(len(letters)):
                def f(x, pos=pos):
                    trial = list(letters)
                    trial[pos] = (trial[pos][0], x)
                    mats = [expm(sys.A(i) * d) for i, d in trial]
                    return _word_value(mats, [d for _, d in trial])

                hi = max(4.0 * letters[pos][1], lo + 1.0)
                x, v = _golden_refine(f, letters[pos][1], lo, hi)
                if v > best_val:
                    best_val = v
                    letters[pos] = (letters[pos][0], x)
        best_word = Word(tuple(letters))
        phi, total = word_flow(sys, best_word)
        best_val = max(best_val, _spectral_radius(phi) ** (1.0 / total))

    return RhoEstimate(
        tau=tau,
        lower=best_val,
        upper=math.inf,
        witness=best_word,
        generator_grid=grid,
        inflation=1.0,
        flags=("lower_only",),
    )


# ---------------------------------------------------------------------------
# upper bound: polytope-norm certification


def _batch_min_eig(mats):
    return np.linalg.eigvalsh(mats)[..., 0]


class _Certifier:
    """Worklist certification of |letter|_v <= mu_c^t on a duration grid."""

    def __init__(self, modes_A, tau, mu_c, delta, cap, budget):
        self.modes_A = modes_A
        self.n = modes_A[0].shape[0]
        self.tau = tau
        self.mu_c = mu_c
        self.log_mu = math.log(mu_c)
        self.delta = delta
        self.budget = budget
        self.flags = set()
        self.caps = [cap] * len(modes_A)
        self.letters = None
        self.stored = [np.eye(self.n)]
        self.times = [0.0]
        self.grams = [np.eye(self.n)]

    def _build_letters(self):
        mats = []
        times = []
        for k, A in enumerate(self.modes_A):
            t0 = max(self.tau, self.delta)
            ts = np.arange(t0, self.caps[k] + self.delta / 2, self.delta)
            if ts.size > 120_000:
                raise ValueError("certification letter grid too large; increase delta")
            E = _mode_exponentials(A, ts) * np.exp(-self.log_mu * ts)[:, None, None]
            mats.append(E)
            times.append(ts)
        self.letters = np.concatenate(mats, axis=0)
        self.letter_times = np.concatenate(times)

    def seed(self, sys, witness: Word | None):
        if witness is None or not witness.letters:
            return
        letters = witness.letters
        suffix = np.eye(self.n)
        t_acc = 0.0
        seeds = []
        for i, d in reversed(letters):
            suffix = suffix @ (expm(sys.A(i) * d) * self.mu_c ** (-d))
            t_acc += d
            seeds.append((suffix.copy(), t_acc))
        cycle, t_cycle = seeds[-1]
        power = cycle.copy()
        t_pow = t_cycle
        for _ in range(2):
            power = power @ cycle
            t_pow += t_cycle
            seeds.append((power.copy(), t_pow))
        for S, t in seeds:
            if np.isfinite(S).all():
                self.stored.append(S)
                self.times.append(t)
                self.grams.append(S.T @ S)

    def _dominated_mask(self, Q):
        """Which Gram matrices in Q are dominated by a stored one."""
        alive = np.where(np.linalg.eigvalsh(Q)[:, -1] > 1.0 + _PSD_TOL)[0]
        if alive.size == 0:
            return np.ones(len(Q), dtype=bool)
        G = np.stack(self.grams)
        order = np.argsort(-np.einsum("kii->k", G))
        for k in order:
            if alive.size == 0:
                break
            tol = _PSD_TOL * (1.0 + np.trace(G[k]))
            mn = _batch_min_eig(G[k][None] - Q[alive])
            alive = alive[mn < -tol]
        if alive.size:
            Gm = G.mean(axis=0)
            tol = _PSD_TOL * (1.0 + np.trace(Gm))
            mn = _batch_min_eig(Gm[None] - Q[alive])
            alive = alive[mn < -tol]
        mask = np.ones(len(Q), dtype=bool)
        mask[alive] = False
        return mask

    def run(self):
        self._build_letters()
        work = list(range(len(self.stored)))
        while work:
            j = work.pop(0)
            P = np.einsum("ab,lbc->lac", self.stored[j], self.letters)
            Q = np.einsum("lba,lbc->lac", P, P)
            mask = self._dominated_mask(Q)
            new_idx = np.where(~mask)[0]
            for idx in new_idx:
                if len(self.stored) >= self.budget:
                    self.flags.add("budget_exhausted")
                    return False
                self.stored.append(P[idx])
                self.times.append(self.times[j] + float(self.letter_times[idx]))
                self.grams.append(Q[idx])
                work.append(len(self.stored) - 1)
        return True

    def v_max(self):
        return max(float(np.linalg.norm(S, 2)) for S in self.stored)


def _mode_kappa(A):
    """Similarity conditioning for the bound |e^{At}| <= kappa e^{alpha t}."""
    try:
        w, V = np.linalg.eig(A)
        cond = np.linalg.cond(V)
        if np.isfinite(cond) and cond < 1e12:
            return float(cond), ()
    except np.linalg.LinAlgError:
        pass
    alpha = _spectral_abscissa(A)
    ts = np.linspace(0.1, 50.0, 200)
    kappa = max(np.linalg.norm(expm(A * t), 2) * math.exp(-alpha * t) for t in ts)
    return 2.0 * float(kappa), ("kappa_sampled",)


def _certify_at(sys, tau, mu_c, delta, cap, budget, witness):
    """One certification attempt; returns (certifier, stabilized, flags)."""
    modes_A = [m.A for m in sys.modes]
    cert = _Certifier(modes_A, tau, mu_c, delta, cap, budget)
    cert.seed(sys, witness)
    stabilized = cert.run()
    flags = set(cert.flags)
    if stabilized:
        # long-dwell closure: extend the tested grid until the per-mode
        # eigen-envelope kappa e^{alpha t} falls below mu_c^t in the v-norm
        for _ in range(3):
            vmax = cert.v_max()
            need = []
            for k, A in enumerate(modes_A):
                alpha = _spectral_abscissa(A)
                if alpha >= cert.log_mu - 1e-12:
                    flags.add("long_dwell_heuristic")
                    continue
                kappa, kf = _mode_kappa(A)
                flags.update(kf)
                t_star = math.log(max(vmax * kappa, 1.0)) / (cert.log_mu - alpha)
                if t_star > cert.caps[k] + 1e-9:
                    need.append((k, t_star))
            if not need:
                break
            for k, t_star in need:
                cert.caps[k] = t_star + cert.delta
            stabilized = cert.run()
            if not stabilized:
                flags.add("budget_exhausted")
                break
        else:
            flags.add("long_dwell_heuristic")
    return cert, stabilized, flags


def rho_upper(
    sys: SystemSpec,
    cls: SignalClassSpec,
    *,
    mu_hat: float | None = None,
    lower_estimate: RhoEstimate | None = None,
    eps: float = 0.005,
    delta: float | None = None,
    cap: float | None = None,
    budget: int = 600,
    eps_attempts: int = 4,
    search_opts: dict | None = None,
) -> RhoEstimate:
    """Certified-up-to-grid-inflation upper bound on the spectral radius.

    The candidate rate is mu_hat (default: the lower-bound search result)
    inflated by eps; certification failures retry with doubled eps.  The
    reported upper bound is mu_c * exp(a_max * delta) where a_max is the
    largest mode norm; a 'budget_exhausted' or 'long_dwell_heuristic' flag
    marks the bound as best-effort rather than certified.
    """
    tau = class_tau(cls, for_upper=True)
    if lower_estimate is None:
        lower_estimate = rho_lower(sys, cls, **(search_opts or {}))
    if mu_hat is None:
        mu_hat = lower_estimate.lower
    if mu_hat <= 0:
        raise ValueError("mu_hat must be positive")
    if delta is None:
        delta = tau / 20.0 if tau > 0 else 0.05
    if cap is None:
        cap = 10.0 * max(tau, 1.0)
    a_max = max(float(np.linalg.norm(m.A, 2)) for m in sys.modes)
    inflation = math.exp(a_max * delta)

    attempt_eps = eps
    result = None
    for _ in range(max(eps_attempts, 1)):
        mu_c = mu_hat * (1.0 + attempt_eps)
        cert, stabilized, flags = _certify_at(sys, tau, mu_c, delta, cap, budget, lower_estimate.witness)
        if stabilized and "budget_exhausted" not in flags:
            result = (mu_c, stabilized, flags, attempt_eps)
            break
        if result is None:
            # keep the tightest attempt as the flagged best-effort bound
            result = (mu_c, stabilized, flags, attempt_eps)
        attempt_eps *= 2.0
    mu_c, stabilized, flags, used_eps = result
    out_flags = set(flags)
    out_flags.add("stabilized" if stabilized else "not_stabilized")
    out_flags.add(f"eps={used_eps:g}")
    upper = mu_c * inflation
    if upper < lower_estimate.lower:
        # only reachable with a user-supplied mu_hat below the search result
        out_flags.add("lower_clamped_to_upper")
    return RhoEstimate(
        tau=lower_estimate.tau,
        lower=min(lower_estimate.lower, upper),
        upper=upper,
        witness=lower_estimate.witness,
        generator_grid=lower_estimate.generator_grid,
        inflation=inflation,
        flags=tuple(sorted(out_flags)),
        delta=delta,
        cap=cap,
    )


def rho_estimate(sys, cls, *, search_opts=None, upper_opts=None) -> RhoEstimate:
    """Convenience: lower-bound search followed by upper-bound certification."""
    lower = rho_lower(sys, cls, **(search_opts or {}))
    return rho_upper(sys, cls, lower_estimate=lower, **(upper_opts or {}))


def extremal_norm(
    sys: SystemSpec,
    cls: SignalClassSpec,
    mu_hat: float,
    *,
    delta: float | None = None,
    cap: float | None = None,
    budget: int = 600,
    witness: Word | None = None,
) -> PolytopeNorm:
    """Approximate extremal norm at rate mu_hat from the stabilized iteration."""
    if mu_hat <= 0:
        raise ValueError("mu_hat must be positive")
    tau = class_tau(cls, for_upper=True)
    if delta is None:
        delta = tau / 20.0 if tau > 0 else 0.05
    if cap is None:
        cap = 10.0 * max(tau, 1.0)
    cert, stabilized, flags = _certify_at(sys, tau, mu_hat, delta, cap, budget, witness)
    return PolytopeNorm(
        scaled=np.stack(cert.stored),
        times=np.array(cert.times),
        mu=mu_hat,
        stabilized=stabilized and "budget_exhausted" not in flags,
        flags=tuple(sorted(flags)),
    )


# ---------------------------------------------------------------------------
# quasi-extremal trajectories


@dataclass(frozen=True, eq=False)
class QuasiExtremalReport:
    trajectory: "Trajectory"
    mu_hat: float
    c_lower: float
    c_upper: float
    signal: Signal


def _witness_polytope(sys, witness, mu_hat, n_cycles=3):
    """Scaled completions (suffix products) of the repeated witness cycle.

    With suffixes S_j = L_k ... L_{j+1} stored, applying the cycle letter at
    phase j maps the S_{j+1}-component onto the S_j-component, so a greedy
    maximizing this polytope norm keeps the witness cycle available as a
    non-losing move, so the growth certificate of the witness is realized
    instead of the myopic euclidean choice."""
    mats = [np.eye(sys.n)]
    if witness is not None and witness.letters:
        scaled = [expm(sys.A(i) * d) * mu_hat ** (-d) for i, d in witness.letters]
        acc = np.eye(sys.n)
        for _ in range(n_cycles):
            for L in reversed(scaled):
                acc = acc @ L
                if np.isfinite(acc).all():
                    mats.append(acc.copy())
    return np.stack(mats)


def quasi_extremal_trajectory(
    sys: SystemSpec,
    cls: SignalClassSpec,
    x0,
    horizon: float,
    *,
    mu_hat: float | None = None,
    duration_grid=None,
    sample_dt: float = 0.05,
    search_opts: dict | None = None,
) -> QuasiExtremalReport:
    """Greedy class-valid trajectory tracking the worst-case growth rate.

    At each state the next letter maximizes the mu-scaled growth measured in
    the witness-cycle polytope norm (the scaled prefixes of the lower-bound
    witness); ties break on lowest mode then shortest duration.  The report
    carries the measured sandwich constants
    c_lower <= |x(t)| / (mu^t |x0|) <= c_upper at all sample times.
    """
    from .flows import Trajectory

    x0 = np.asarray(x0, dtype=float).reshape(sys.n)
    if np.linalg.norm(x0) == 0:
        raise ValueError("x0 must be nonzero")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    tau = class_tau(cls)
    lower_est = None
    if mu_hat is None:
        lower_est = rho_lower(sys, cls, **(search_opts or {}))
        mu_hat = lower_est.lower
    log_mu = math.log(mu_hat) if mu_hat > 0 else -math.inf

    if duration_grid is None:
        if tau > 0:
            duration_grid = (tau, 1.5 * tau, 2.0 * tau, 3.0 * tau)
        else:
            duration_grid = (0.05, 0.1, 0.25, 0.5, 1.0)
    if lower_est is None:
        lower_est = rho_lower(sys, cls, **(search_opts or {}))
    durations = sorted(set(tuple(duration_grid) +
                           tuple(d for _, d in lower_est.witness.letters
                                 if d >= max(tau, 1e-9) - 1e-12)))
    letters = []
    for k in range(sys.n_modes):
        E = _mode_exponentials(sys.A(k), durations)
        for gi, d in enumerate(durations):
            letters.append((k, float(d), E[gi]))
    poly = _witness_polytope(sys, lower_est.witness, mu_hat)

    def v_hat(v):
        return float(np.max(np.linalg.norm(poly @ v, axis=1)))

    segs = []
    x = x0.copy()
    t = 0.0
    times, states = [0.0], [x0.copy()]
    while t < horizon - 1e-12:
        best = None
        for k1, d1, E1 in letters:
            val = v_hat(E1 @ x)
            score = (math.log(val) if val > 0 else -math.inf) - d1 * log_mu
            key = (-round(score, 12), k1, d1)
            if best is None or key < best[0]:
                best = (key, k1, d1, E1)
        _, k1, d1, E1 = best
        d1 = min(d1, max(horizon - t, min(durations)))
        steps = max(int(math.ceil(d1 / sample_dt)), 1)
        h = d1 / steps
        Eh = expm(sys.A(k1) * h)
        for _ in range(steps):
            x = Eh @ x
            t += h
            times.append(t)
            states.append(x.copy())
        segs.append((k1, d1))
    signal = Signal(tuple(segs)).merged()
    times = np.array(times)
    states = np.array(states)
    outputs = np.array([sys.C(signal.mode_at(min(tt, signal.horizon - 1e-12))) @ xx
                        for tt, xx in zip(times, states)])
    ratios = np.linalg.norm(states, axis=1) / (mu_hat ** times * np.linalg.norm(x0))
    traj = Trajectory(times=times, states=states, outputs=outputs)
    return QuasiExtremalReport(
        trajectory=traj,
        mu_hat=mu_hat,
        c_lower=float(ratios.min()),
        c_upper=float(ratios.max()),
        signal=signal,
    )


# ---------------------------------------------------------------------------
# rho as a function of tau


@dataclass(frozen=True, eq=False)
class RhoCurve:
    taus: tuple[float, ...]
    estimates: tuple[RhoEstimate, ...]
    lower_raw: tuple[float, ...]
    lower_envelope: tuple[float, ...]


def rho_curve(sys: SystemSpec, taus, *, with_upper=False, search_opts=None,
              upper_opts=None) -> RhoCurve:
    """Per-tau estimates with a monotone (non-increasing) lower envelope.

    The search budget is shared across the grid: every witness found at a
    larger dwell floor is re-scored at the smaller ones (where it remains
    class-valid), so raw lower bounds are non-increasing by construction;
    the right-to-left running maximum is reported alongside as the envelope.
    """
    taus = tuple(float(t) for t in taus)
    if any(t < 0 for t in taus) or list(taus) != sorted(taus):
        raise ValueError("tau values must be nonnegative and sorted ascending")
    ests: list[RhoEstimate | None] = [None] * len(taus)
    carried: list[Word] = []
    for idx in range(len(taus) - 1, -1, -1):
        tau = taus[idx]
        cls = SignalClassSpec.dwell(tau) if tau > 0 else SignalClassSpec.arbitrary()
        est = rho_lower(sys, cls, **(search_opts or {}))
        for w in carried:
            phi, total = word_flow(sys, w)
            val = _spectral_radius(phi) ** (1.0 / total) if total > 0 else 0.0
            if val > est.lower:
                est = replace(est, lower=val, witness=w)
        if est.witness is not None:
            carried.append(est.witness)
        if with_upper:
            est = rho_upper(sys, cls, lower_estimate=est, **(upper_opts or {}))
        ests[idx] = est
    raw = [e.lower for e in ests]
    env = list(raw)
    for i in range(len(env) - 2, -1, -1):
        env[i] = max(env[i], env[i + 1])
    return RhoCurve(taus=taus, estimates=tuple(ests),
                    lower_raw=tuple(raw), lower_envelope=tuple(env))
