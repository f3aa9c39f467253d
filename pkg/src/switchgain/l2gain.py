"""Finite-horizon L2-gains, gain search over a switching class, gain
finiteness verdict, and minimal dwell-time bracketing.

The finite-horizon bounded-real test is the Riccati escape-time criterion:
gamma exceeds the gain on [0, T] exactly when the backward Riccati equation
-P' = A'P + PA + C'C + gamma^-2 P B B' P with P(T) = 0 stays bounded on the
horizon.  Bisection over gamma gives the gain; an adjoint power iteration on
the discretized input-output operator provides an independent lower-bound
oracle and witness inputs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import Signal, SignalClassSpec, SystemSpec, validate_membership
from .flows import _clip_spans, _zoh_step
from .realization import ObservabilityReport, check_uniform_observability, minimal_realization
from .spectral import RhoEstimate, class_tau, rho_lower, rho_upper

__all__ = [
    "GainEstimate",
    "FinitenessVerdict",
    "TauMinResult",
    "gain_for_signal",
    "gain_power_lower",
    "gain_search",
    "finiteness_test",
    "tau_min",
]

ESCAPE_NORM = 1e12


@dataclass(frozen=True, eq=False)
class GainEstimate:
    value: float
    horizon: float
    method: str
    tolerance: float
    witness_signal: Signal | None = None
    witness_input_energy_ratio: float | None = None
    witness_input: np.ndarray | None = None
    input_dt: float | None = None

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("gain value must be nonnegative")

    def to_dict(self):
        return {
            "value": self.value,
            "T": self.horizon if math.isfinite(self.horizon) else None,
            "method": self.method,
            "tolerance": self.tolerance,
            "witness_signal": [[i, d] for i, d in self.witness_signal.segments]
            if self.witness_signal
            else None,
            "witness_ratio": self.witness_input_energy_ratio,
        }


@dataclass(frozen=True, eq=False)
class FinitenessVerdict:
    verdict: str                      # finite / infinite / undetermined
    rho_min_realization: RhoEstimate
    uniform_obs: ObservabilityReport | None
    rationale: str
    minimal_dim: int


@dataclass(frozen=True, eq=False)
class TauMinResult:
    tau_reject: float                 # rho >= 1 certified (or bracket floor)
    tau_accept: float                 # rho < 1 certified
    flags: tuple[str, ...] = ()

    @property
    def width(self):
        return self.tau_accept - self.tau_reject


# ---------------------------------------------------------------------------
# Riccati bounded-real test


def _reversed_segments(sig, T):
    """Segments of the signal on [0, T], listed backwards from T."""
    spans = _clip_spans(sig, 0.0, T)
    return [(hi - lo, i) for lo, hi, i in reversed(spans)]


def _riccati_feasible(sys, rev_segs, gamma):
    """True when the backward Riccati equation stays bounded on the horizon."""
    n = sys.n
    if n == 0:
        return True
    inv_g2 = 1.0 / (gamma * gamma)
    p = np.zeros(n * n)
    for dt, i in rev_segs:
        A, B, C = sys.A(i), sys.B(i), sys.C(i)
        BBT = B @ B.T
        CTC = C.T @ C

        def rhs(_, pv):
            P = pv.reshape(n, n)
            dP = A.T @ P + P @ A + CTC + inv_g2 * (P @ BBT @ P)
            return dP.reshape(-1)

        def escape(_, pv):
            val = float(np.linalg.norm(pv))
            return ESCAPE_NORM - (val if math.isfinite(val) else 2 * ESCAPE_NORM)

        escape.terminal = True
        with np.errstate(over="ignore", invalid="ignore"):
            sol = solve_ivp(rhs, (0.0, dt), p, method="RK45",
                            rtol=1e-8, atol=1e-10, events=escape)
        if sol.status != 0 or not sol.success:
            return False
        p = sol.y[:, -1]
        if not np.all(np.isfinite(p)):
            return False
        P = p.reshape(n, n)
        p = (0.5 * (P + P.T)).reshape(-1)
    return True


def gain_for_signal(
    sys: SystemSpec,
    sig: Signal,
    T: float,
    tol: float = 1e-4,
    *,
    gamma_hi: float = 1.0,
    compute_witness: bool = False,
    witness_dt: float | None = None,
) -> GainEstimate:
    """Finite-horizon L2-gain of one signal via Riccati bisection.

    Bisection tolerance is relative: |hi - lo| < tol * max(hi, 1).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if T <= 0 or T > sig.horizon * (1 + 1e-9):
        raise ValueError(f"horizon T={T} outside the signal horizon {sig.horizon}")
    sig.check_modes(sys)
    rev = _reversed_segments(sig, T)

    if sys.n == 0 or all(np.all(sys.C(i) == 0.0) for _, i in rev):
        return GainEstimate(0.0, T, "rde_bisection", tol, witness_signal=sig)

    # canonical dyadic bracket: the smallest feasible power of two, so the
    # bisection sequence (hence the returned value) does not depend on the
    # warm start; nested search sweeps then reproduce identical values
    m = max(int(math.ceil(math.log2(max(gamma_hi, 1.0)))), 0)
    probes = 0
    while not _riccati_feasible(sys, rev, 2.0 ** m):
        m += 1
        probes += 1
        if probes > 60:
            raise RuntimeError("no feasible gamma found; gain appears unbounded")
    if probes == 0:
        while m > -40 and _riccati_feasible(sys, rev, 2.0 ** (m - 1)):
            m -= 1
    hi = 2.0 ** m
    lo = 0.0
    while hi - lo > tol * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if _riccati_feasible(sys, rev, mid):
            hi = mid
        else:
            lo = mid
    value = 0.5 * (lo + hi)

    ratio = None
    witness_u = None
    dt_used = None
    if compute_witness:
        dt_used = witness_dt if witness_dt else T / 400.0
        power = gain_power_lower(sys, sig, T, dt_used)
        ratio = power.value
        witness_u = power.witness_input
    return GainEstimate(value, T, "rde_bisection", tol, witness_signal=sig,
                        witness_input_energy_ratio=ratio, witness_input=witness_u,
                        input_dt=dt_used)


# ---------------------------------------------------------------------------
# power-iteration lower bound


def _step_operators(sys, sig, T, dt):
    steps = int(round(T / dt))
    if abs(steps * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError("grid step does not divide the horizon")
    cache = {}
    phis, gams, cs = [], [], []
    for k in range(steps):
        phi, gam = _zoh_step(sys, sig, k * dt, dt, cache)
        phis.append(phi)
        gams.append(gam)
        cs.append(sys.C(sig.mode_at(k * dt)))
    cs.append(sys.C(sig.mode_at(min(steps * dt, sig.horizon - 1e-12))))
    return phis, gams, cs, steps


def gain_power_lower(
    sys: SystemSpec,
    sig: Signal,
    T: float,
    grid_step: float,
    *,
    iters: int = 80,
    rtol: float = 1e-10,
    seed: int = 0,
) -> GainEstimate:
    """Power iteration on L*L for the discrete input-to-output map L.

    Inputs are zero-order-hold samples; output energy uses the trapezoid rule
    on the grid.  Any iterate's Rayleigh ratio |Lu|/|u| is a valid lower
    bound of the discretized gain, so the best ratio seen is returned.
    """
    if grid_step <= 0:
        raise ValueError("grid step must be positive")
    sig.check_modes(sys)
    phis, gams, cs, steps = _step_operators(sys, sig, T, grid_step)
    n, m, p = sys.n, sys.m, sys.p
    w = np.full(steps + 1, grid_step)
    w[0] = w[-1] = grid_step / 2.0

    def forward(u):
        x = np.zeros(n)
        y = np.empty((steps + 1, p))
        y[0] = cs[0] @ x
        for k in range(steps):
            x = phis[k] @ x + gams[k] @ u[k]
            y[k + 1] = cs[k + 1] @ x
        return y

    def adjoint(y):
        lam = w[steps] * (cs[steps].T @ y[steps])
        out = np.empty((steps, m))
        for k in range(steps - 1, -1, -1):
            out[k] = gams[k].T @ lam / grid_step
            lam = phis[k].T @ lam + w[k] * (cs[k].T @ y[k])
        return out

    rng = np.random.default_rng(seed)
    u = rng.standard_normal((steps, m))
    nu = math.sqrt(grid_step * float(np.sum(u * u)))
    if nu == 0:
        u[:] = 1.0
        nu = math.sqrt(grid_step * u.size)
    u /= nu

    best = 0.0
    prev = None
    best_u = u.copy()
    for _ in range(iters):
        y = forward(u)
        num = math.sqrt(float(np.sum(w[:, None] * y * y)))
        den = math.sqrt(grid_step * float(np.sum(u * u)))
        ratio = num / den if den > 0 else 0.0
        if ratio > best:
            best = ratio
            best_u = u.copy()
        if prev is not None and abs(ratio - prev) <= rtol * max(ratio, 1e-30):
            break
        prev = ratio
        nxt = adjoint(y)
        norm = math.sqrt(grid_step * float(np.sum(nxt * nxt)))
        if norm == 0:
            break
        u = nxt / norm
    return GainEstimate(best, T, "power_iteration", rtol, witness_signal=sig,
                        witness_input_energy_ratio=best, witness_input=best_u,
                        input_dt=grid_step)


# ---------------------------------------------------------------------------
# search over a class


def _candidate_signals(n_modes, T, max_switches, duration_grid):
    """Deterministic BFS candidate enumeration, independent of the class.

    Every candidate covers exactly [0, T]: the last segment takes the
    remaining time.  Class validity is checked by the caller, so enumerations
    with different dwell floors stay nested.
    """
    for i in range(n_modes):
        yield Signal(((i, T),))
    for k in range(2, max_switches + 2):
        seqs = [s for s in itertools.product(range(n_modes), repeat=k)
                if all(s[j] != s[j + 1] for j in range(k - 1))]
        for seq in seqs:
            for durs in itertools.product(duration_grid, repeat=k - 1):
                tail = T - sum(durs)
                if tail <= 1e-9:
                    continue
                yield Signal(tuple(zip(seq[:-1], durs)) + ((seq[-1], tail),))


def gain_search(
    sys: SystemSpec,
    cls: SignalClassSpec,
    T: float,
    *,
    max_switches: int = 4,
    duration_grid=None,
    refine: bool = True,
    eval_budget: int = 160,
    tol: float = 1e-4,
) -> GainEstimate:
    """Lower bound on the class gain gamma_2(tau, T) by signal enumeration.

    Mode sequences up to max_switches switches with grid durations are
    enumerated in a fixed order and filtered for class validity, so smaller
    dwell floors evaluate supersets (monotonicity under nested budgets); the
    best signal's switch times are then locally refined when refine is set.
    """
    tau = class_tau(cls)
    if duration_grid is None:
        duration_grid = tuple(T * f for f in (0.125, 0.25, 0.5, 0.75))
    dwell_cls = cls if cls.kind in ("arbitrary", "dwell") else None
    if dwell_cls is None:
        raise ValueError(f"gain search supports arbitrary/dwell classes, not {cls.kind!r}")

    best = None
    best_sig = None
    seen = 0
    for sig in _candidate_signals(sys.n_modes, T, max_switches, duration_grid):
        seen += 1
        if seen > eval_budget:
            break
        if tau > 0 and not validate_membership(sig, dwell_cls).ok:
            continue
        if best is not None and best > 0:
            # one feasibility probe at the incumbent: a candidate whose RDE
            # survives at gamma = best cannot raise the maximum
            if _riccati_feasible(sys, _reversed_segments(sig, T), best):
                continue
            est = gain_for_signal(sys, sig, T, tol, gamma_hi=best)
        else:
            est = gain_for_signal(sys, sig, T, tol)
        if best is None or est.value > best:
            best = est.value
            best_sig = sig
    if best is None:
        raise ValueError("evaluation budget too small: no class-valid candidate evaluated")

    if refine and len(best_sig.segments) > 1:
        segs = list(best_sig.segments)
        switch_times = np.cumsum([d for _, d in segs])[:-1]
        for _ in range(2):
            for j in range(len(switch_times)):
                lo_lim = (switch_times[j - 1] if j else 0.0) + max(tau, 1e-6)
                hi_lim = (switch_times[j + 1] if j + 1 < len(switch_times) else T) - max(tau, 1e-6)
                if hi_lim <= lo_lim:
                    continue

                def value_at(t_j):
                    ts = switch_times.copy()
                    ts[j] = t_j
                    bounds = np.concatenate([[0.0], ts, [T]])
                    sig2 = Signal(tuple((segs[i][0], bounds[i + 1] - bounds[i])
                                        for i in range(len(segs))))
                    if tau > 0 and not validate_membership(sig2, dwell_cls).ok:
                        return -1.0, None
                    if best > 0 and _riccati_feasible(sys, _reversed_segments(sig2, T), best):
                        return -1.0, None
                    return gain_for_signal(sys, sig2, T, tol, gamma_hi=best or 1.0).value, sig2

                candidates = np.linspace(lo_lim, hi_lim, 5)
                for t_j in candidates:
                    v, sig2 = value_at(float(t_j))
                    if v > best:
                        best, best_sig = v, sig2
                        switch_times[j] = t_j
    return GainEstimate(best, T, "search", tol, witness_signal=best_sig)


# ---------------------------------------------------------------------------
# finiteness and tau_min


def finiteness_test(
    sys: SystemSpec,
    cls: SignalClassSpec,
    *,
    search_opts: dict | None = None,
    upper_opts: dict | None = None,
    obs_window: float | None = None,
    obs_samples: int = 12,
    tol: float = 1e-9,
    seed: int = 0,
) -> FinitenessVerdict:
    """Gain-finiteness trichotomy from the minimal realization's rho bounds.

    finite requires a certified upper bound below one; infinite requires the
    rigorous lower bound above one, or at one combined with certified uniform
    observability.  Anything else is undetermined; without uniform
    observability a unit spectral radius genuinely leaves both outcomes open.
    """
    if cls.kind not in ("arbitrary", "dwell"):
        raise ValueError(f"finiteness test supports arbitrary/dwell classes, not {cls.kind!r}")
    minreal = minimal_realization(sys)
    if minreal.dim == 0:
        zero = RhoEstimate(tau=class_tau(cls), lower=0.0, upper=0.0, witness=None,
                           generator_grid=(), inflation=1.0, flags=("zero_system",))
        return FinitenessVerdict("finite", zero, None,
                                 "minimal realization is zero-dimensional; the gain is 0", 0)
    ms = minreal.sys_min
    lower_est = rho_lower(ms, cls, **(search_opts or {}))
    est = rho_upper(ms, cls, lower_estimate=lower_est, **(upper_opts or {}))
    tau = class_tau(cls)
    window = obs_window if obs_window else max(1.0, 2.0 * tau)
    obs = check_uniform_observability(ms, cls, window, samples=obs_samples, seed=seed)
    certified_upper = "stabilized" in est.flags and "long_dwell_heuristic" not in est.flags

    obs_text = {
        "uniformly_observable": "minimal realization is uniformly observable",
        "not_uniformly_observable": "minimal realization is not uniformly observable",
        "inconclusive": "uniform observability is inconclusive",
    }[obs.verdict]

    if est.upper < 1.0 and certified_upper:
        verdict = "finite"
        rationale = f"certified rho upper bound {est.upper:.6f} < 1"
    elif est.lower > 1.0:
        verdict = "infinite"
        rationale = f"rho lower bound {est.lower:.6f} > 1"
    elif est.lower >= 1.0 - tol and obs.verdict == "uniformly_observable":
        verdict = "infinite"
        rationale = (f"rho lower bound {est.lower:.6f} >= 1 - {tol:g} and the "
                     f"{obs_text}")
    else:
        verdict = "undetermined"
        rationale = (f"rho bracket [{est.lower:.6f}, {est.upper:.6f}] straddles 1 "
                     f"and the {obs_text}")
    return FinitenessVerdict(verdict, est, obs, rationale, minreal.dim)


def _classify_tau(ms, tau, search_opts, upper_opts):
    cls = SignalClassSpec.dwell(tau) if tau > 0 else SignalClassSpec.arbitrary()
    lower_est = rho_lower(ms, cls, **(search_opts or {}))
    if lower_est.lower >= 1.0:
        return "reject", lower_est
    est = rho_upper(ms, cls, lower_estimate=lower_est, **(upper_opts or {}))
    certified = "stabilized" in est.flags and "long_dwell_heuristic" not in est.flags
    if est.upper < 1.0 and certified:
        return "accept", est
    return "undecided", est


def tau_min(
    sys: SystemSpec,
    bracket,
    tol: float = 0.05,
    *,
    search_opts: dict | None = None,
    upper_opts: dict | None = None,
    boost_opts: dict | None = None,
    max_iters: int = 60,
) -> TauMinResult:
    """Bracket the minimal dwell time via bisection on the rho trichotomy.

    Requires rho(tau_lo) >= 1 (reject side) and a certified rho(tau_hi) < 1
    (accept side).  Undecided midpoints retry with a boosted budget and then
    fall back to quarter-point probing; a persistent undecided zone returns
    the wider interval with an 'undecided_zone' flag.
    """
    tau_lo, tau_hi = float(bracket[0]), float(bracket[1])
    if not (0 <= tau_lo < tau_hi):
        raise ValueError("bracket must satisfy 0 <= tau_lo < tau_hi")
    minreal = minimal_realization(sys)
    if minreal.dim == 0:
        return TauMinResult(0.0, 0.0, flags=("zero_system",))
    ms = minreal.sys_min

    def classify(tau):
        verdict, est = _classify_tau(ms, tau, search_opts, upper_opts)
        if verdict == "undecided":
            if boost_opts is not None:
                merged = dict(upper_opts or {})
                merged.update(boost_opts)
            else:
                # halve the grid step (shrinks the inflation dead band) and
                # double the certification budget
                merged = dict(upper_opts or {})
                base_delta = merged.get("delta") or (tau / 20.0 if tau > 0 else 0.05)
                merged["delta"] = base_delta / 2.0
                merged["budget"] = 2 * merged.get("budget", 600)
            verdict, est = _classify_tau(ms, tau, search_opts, merged)
        return verdict

    lo_verdict = classify(tau_lo)
    if lo_verdict != "reject":
        if classify(0.0) == "accept":
            return TauMinResult(0.0, 0.0, flags=("tau_min_zero",))
        return TauMinResult(0.0, tau_lo, flags=("bracket_lo_not_rejected",))
    hi_verdict = classify(tau_hi)
    if hi_verdict == "reject":
        raise ValueError("invalid bracket: rho(tau_hi) >= 1")
    if hi_verdict == "undecided":
        raise ValueError("bracket upper end undecidable at the available budget")

    lo, hi = tau_lo, tau_hi
    flags = []
    for _ in range(max_iters):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        verdict = classify(mid)
        if verdict == "reject":
            lo = mid
        elif verdict == "accept":
            hi = mid
        else:
            progressed = False
            q1 = lo + 0.25 * (hi - lo)
            if classify(q1) == "reject":
                lo = q1
                progressed = True
            q3 = lo + 0.75 * (hi - lo)
            if classify(q3) == "accept":
                hi = q3
                progressed = True
            if not progressed:
                flags.append("undecided_zone")
                break
    return TauMinResult(lo, hi, flags=tuple(flags))
