"""Discrete-event simulation of the ring and rare-event estimation of long waits.

Two engines share the same routing rule:

* :class:`NetworkState` with :func:`step` advances one arrival at a time and
  keeps the full bookkeeping (arrived work per flow, assigned work per
  server, served work).  It is meant for inspection, event logs and
  invariant checks.
* :func:`estimate_overload` runs many independent replicas in blocks.  Each
  replica starts empty, runs a nominal warm-up and then an observation
  window ending at the query epoch, where the virtual message of flow 0
  reads ``min(w[k-1], w[0])``.  Arrival streams are drawn up front with
  numpy and replayed through the compiled routing kernel.

Flow ``i`` is served by servers ``i - 1`` and ``i`` (indices mod ``k``).
Flow 0 carries the virtual message.  Ties go to server ``i - 1``.

Importance sampling tilts the flows of a target scenario during the
observation window: arrival rate ``lam * phi(theta)`` and length density
``exp(theta x) f(x) / phi(theta)``.  The likelihood ratio of a tilted flow
over a window of length ``tau`` is ``exp(lam (phi(theta) - 1) tau - theta S)``
with ``S`` the work it brought in the window.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DomainError, InsufficientHits, StabilityError
from .ldp_rates import NetworkParams, optimal_profile, scenario, solve_theta_l, solve_theta_star

MIN_HITS = 20
Z95 = 1.959963984540054


# -- single-event engine --------------------------------------------------------

@dataclass
class NetworkState:
    k: int
    t: float = 0.0
    w: np.ndarray = None
    zeta: np.ndarray = None
    w_hat: np.ndarray = None
    served: float = 0.0

    def __post_init__(self):
        if self.k < 3:
            raise DomainError(f"ring size k must be >= 3, got {self.k}")
        for name in ("w", "zeta", "w_hat"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(self.k))

    def drain_to(self, t: float) -> None:
        dt = t - self.t
        if dt < 0:
            raise DomainError(f"time runs backwards: {t!r} < {self.t!r}")
        v = self.w - dt
        self.served += float(np.sum(np.minimum(self.w, dt)))
        self.w = np.where(v > 0.0, v, 0.0)
        self.t = t

    def route(self, flow: int) -> int:
        """Server that an arrival of ``flow`` joins right now."""
        left = (flow - 1) % self.k
        return left if self.w[left] <= self.w[flow] else flow

    def arrive(self, t: float, flow: int, length: float) -> tuple[int, float]:
        """Apply one arrival; returns ``(server, min workload seen before joining)``."""
        self.drain_to(t)
        srv = self.route(flow)
        seen = min(self.w[(flow - 1) % self.k], self.w[flow])
        self.w[srv] += length
        self.zeta[flow] += length
        self.w_hat[srv] += length
        return srv, float(seen)

    def conservation_gap(self) -> float:
        """Relative mismatch of ``sum(w_hat) - served`` against ``sum(w)``."""
        lhs = float(np.sum(self.w_hat)) - self.served
        rhs = float(np.sum(self.w))
        return abs(lhs - rhs) / max(1.0, float(np.sum(self.w_hat)))


@dataclass(frozen=True)
class Event:
    t: float
    flow: int
    server: int
    length: float
    w_before_min: float


def step(state: NetworkState, model, lam: float, rng: np.random.Generator) -> Event:
    """Advance ``state`` to the next arrival of the superposed Poisson flows."""
    dt = rng.exponential(1.0 / (state.k * lam))
    flow = int(rng.integers(state.k))
    length = float(model.sample(rng))
    srv, seen = state.arrive(state.t + dt, flow, length)
    return Event(state.t, flow, srv, length, seen)


def virtual_wait(state: NetworkState, i: int = 0) -> float:
    """Wait of a zero-length message arriving now with flow ``i``."""
    return float(min(state.w[(i - 1) % state.k], state.w[i % state.k]))


def events_to_csv(events, fh=None) -> str | None:
    """Write events as CSV ``t,flow,server,length,w_before_min`` with 1-based labels."""
    buf = fh if fh is not None else io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "flow", "server", "length", "w_before_min"])
    for ev in events:
        writer.writerow([repr(float(ev.t)), ev.flow + 1, ev.server + 1, repr(float(ev.length)), repr(float(ev.w_before_min))])
    return None if fh is not None else buf.getvalue()


# -- replicated estimation --------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    params: NetworkParams
    n: float = 1.0
    trials: int = 10_000
    seed: int = 0
    warmup: float | None = None
    tilt_l: int | None = None
    tilt_theta: float | None = None
    block_size: int = 2048

    def __post_init__(self):
        if not self.n > 0:
            raise DomainError(f"scaling level n must be positive, got {self.n!r}")
        if self.trials < 2:
            raise DomainError("need at least two trials")
        if self.tilt_l is not None and not 1 <= self.tilt_l <= self.params.k:
            raise DomainError(f"tilt_l must lie in 1..{self.params.k}")
        if self.tilt_theta is not None:
            if self.tilt_l is None:
                raise DomainError("tilt_theta given without tilt_l")
            if not 0.0 <= self.tilt_theta < self.params.model.theta_plus:
                raise DomainError(f"tilt_theta={self.tilt_theta!r} outside [0, theta_plus)")

    @property
    def tilted(self) -> bool:
        return self.tilt_l is not None

    def warmup_time(self) -> float:
        if self.warmup is not None:
            return float(self.warmup)
        rho = self.params.lam * self.params.model.mean
        return 50.0 / (1.0 - rho)

    def scenario_l(self) -> int:
        """Scenario whose optimal duration sets the observation window."""
        if self.tilt_l is not None:
            return self.tilt_l
        return scenario(self.params).l_opt

    def theta_is(self) -> float:
        if self.tilt_theta is not None:
            return float(self.tilt_theta)
        p = self.params
        if self.tilt_l == p.k:
            return solve_theta_star(p.model, p.lam)
        return solve_theta_l(p.model, p.lam, self.tilt_l)

    def tilted_flows(self) -> np.ndarray:
        """Connected flows ``0 .. l-1`` (all flows when ``l = k``)."""
        return np.arange(self.tilt_l if self.tilted else 0)


@dataclass
class Replicas:
    """Raw per-replica output of one simulation run."""
    omega: np.ndarray          # virtual wait of flow 0 at the query epoch
    log_lr: np.ndarray         # log likelihood ratio (zeros without tilt)
    w_end: np.ndarray          # (R, k) workloads at the query epoch
    window_start: float
    t_end: float
    arrivals: list = field(default_factory=list, repr=False)  # per block (times, flows, lengths, counts)


@dataclass
class SimulationResult:
    n: float
    d: float
    threshold: float
    trials: int
    hits: int
    p_hat: float
    std_err: float
    ci95: tuple[float, float]
    rate: float
    tilted: bool
    theta_is: float | None
    window: float
    omega: np.ndarray = field(repr=False)
    census: "CensusResult | None" = None

    def summary(self) -> dict:
        out = {
            "n": self.n, "d": self.d, "threshold": self.threshold, "trials": self.trials,
            "hits": self.hits, "p_hat": self.p_hat, "std_err": self.std_err,
            "ci95": list(self.ci95), "rate": self.rate, "tilted": self.tilted,
            "theta_is": self.theta_is, "window": self.window,
            "omega_mean": float(np.mean(self.omega)),
        }
        if self.census is not None:
            out["census"] = self.census.summary()
        return out


def _block_sizes(config: SimConfig, horizon: float) -> list[int]:
    p = config.params
    per_replica = max(1.0, p.k * p.lam * horizon * 1.5 + 10.0)
    cap = int(max(1, min(config.block_size, 4_000_000 // per_replica)))
    sizes = [cap] * (config.trials // cap)
    if config.trials % cap:
        sizes.append(config.trials % cap)
    return sizes


def _flow_arrivals(rng, model, rate, start, length, R, theta):
    """Poisson(rate) arrivals on ``[start, start+length)`` for ``R`` replicas."""
    counts = rng.poisson(rate * length, R)
    total = int(counts.sum())
    times = start + rng.random(total) * length
    sizes = np.asarray(model.sample(rng, total, theta=theta), dtype=float)
    rep = np.repeat(np.arange(R), counts)
    return rep, times, sizes


def _simulate_block(config: SimConfig, block: int, R: int, W: float, tau: float, theta: float):
    p = config.params
    model, lam, k = p.model, p.lam, p.k
    tilted = set(config.tilted_flows().tolist())
    reps, times, flows, sizes = [], [], [], []
    log_lr = np.zeros(R)
    for i in range(k):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(config.seed, spawn_key=(block, i))))
        r1, t1, s1 = _flow_arrivals(rng, model, lam, 0.0, W, R, 0.0)
        th = theta if i in tilted else 0.0
        rate = lam * model.mgf(th) if th else lam
        r2, t2, s2 = _flow_arrivals(rng, model, rate, W, tau, R, th)
        if th:
            work = np.bincount(r2, weights=s2, minlength=R)
            log_lr += lam * model.mgf_minus_one(th) * tau - th * work
        for r_, t_, s_ in ((r1, t1, s1), (r2, t2, s2)):
            reps.append(r_)
            times.append(t_)
            sizes.append(s_)
            flows.append(np.full(r_.size, i, dtype=np.int64))
    rep = np.concatenate(reps)
    counts = np.bincount(rep, minlength=R).astype(np.int64)
    E = max(int(counts.max()) if R else 0, 1)
    T_ = np.full((R, E), W + tau)
    F_ = np.zeros((R, E), dtype=np.int64)
    L_ = np.zeros((R, E))
    _kernels.pack_block(rep, np.concatenate(times), np.concatenate(flows), np.concatenate(sizes),
                        counts, T_, F_, L_)
    return T_, F_, L_, counts, log_lr


def run_replicas(config: SimConfig, keep_arrivals: bool = False) -> Replicas:
    p = config.params
    if not config.tilted and not p.stable:
        raise StabilityError(f"lambda * E[xi] = {p.lam * p.model.mean!r} >= 1 and no tilt requested")
    W = config.warmup_time()
    tau = config.n * optimal_profile(p, config.scenario_l()).T
    theta = config.theta_is() if config.tilted else 0.0
    omegas, lrs, ws, kept = [], [], [], []
    for block, R in enumerate(_block_sizes(config, W + tau)):
        T_, F_, L_, counts, log_lr = _simulate_block(config, block, R, W, tau, theta)
        w_out = np.zeros((R, p.k))
        srv = np.zeros(T_.shape, dtype=np.int64)
        wmin = np.zeros(T_.shape)
        _kernels.route_block(p.k, T_, F_, L_, counts, np.full(R, W + tau), w_out, srv, wmin)
        omegas.append(np.minimum(w_out[:, p.k - 1], w_out[:, 0]))
        lrs.append(log_lr)
        ws.append(w_out)
        if keep_arrivals:
            kept.append((T_, F_, L_, counts))
    return Replicas(
        omega=np.concatenate(omegas), log_lr=np.concatenate(lrs), w_end=np.vstack(ws),
        window_start=W, t_end=W + tau, arrivals=kept,
    )


def _estimate(values: np.ndarray) -> tuple[float, float]:
    p_hat = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(values.size))
    return p_hat, se


def estimate_overload(config: SimConfig) -> SimulationResult:
    """Estimate ``Pr(omega_1 >= n d)`` and the empirical rate ``-(1/n) ln p``."""
    reps = run_replicas(config)
    return _result(config, reps)


def _result(config: SimConfig, reps: Replicas, census=None) -> SimulationResult:
    p = config.params
    threshold = config.n * p.d
    hit = reps.omega >= threshold
    weights = np.exp(reps.log_lr)
    p_hat, se = _estimate(np.where(hit, weights, 0.0))
    rate = -math.log(p_hat) / config.n if p_hat > 0 else math.inf
    return SimulationResult(
        n=config.n, d=p.d, threshold=threshold, trials=config.trials, hits=int(hit.sum()),
        p_hat=p_hat, std_err=se, ci95=(p_hat - Z95 * se, p_hat + Z95 * se), rate=rate,
        tilted=config.tilted, theta_is=config.theta_is() if config.tilted else None,
        window=reps.t_end - reps.window_start, omega=reps.omega, census=census,
    )


# -- overheating census ----------------------------------------------------------

@dataclass
class CensusResult:
    l_predicted: int
    hits: int
    window: float                 # scaled window length T
    a_min: float
    eps: float
    overheated: np.ndarray        # per-flow weighted frequency of window slope > a_min
    tube: np.ndarray              # per-flow weighted frequency of the eps-tube test
    slopes: np.ndarray            # per-flow weighted mean window slope
    count_freq: np.ndarray        # weighted distribution of the number of overheated flows (0..k)
    solitary: float               # only flow 0 overheated
    collective: float             # every flow overheated
    matches_prediction: float     # overheated set equals the predicted pattern
    unweighted_solitary: float
    unweighted_collective: float

    def summary(self) -> dict:
        return {
            "l_predicted": self.l_predicted, "hits": self.hits, "window": self.window,
            "a_min": self.a_min, "eps": self.eps,
            "overheated": self.overheated.tolist(), "tube": self.tube.tolist(),
            "slopes": self.slopes.tolist(), "count_freq": self.count_freq.tolist(),
            "solitary": self.solitary, "collective": self.collective,
            "matches_prediction": self.matches_prediction,
            "unweighted_solitary": self.unweighted_solitary,
            "unweighted_collective": self.unweighted_collective,
        }


def overheat_census(config: SimConfig, window: float | None = None, a_min: float = 1.0,
                    eps: float = 0.1, min_hits: int = MIN_HITS) -> SimulationResult:
    """Estimate the overload probability and classify the input of every flow on hits.

    For each replica with ``omega >= n d`` and each flow, the scaled input
    ``zeta_n(s) = zeta(n s) / n`` over the last ``n T`` time units before the
    query is summarized by its mean slope (overheated when above ``a_min``)
    and by the tube test: whether some line of slope ``> a_min`` stays
    within ``eps`` of the path.  Frequencies are weighted by the likelihood
    ratio, i.e. they estimate conditional probabilities under the nominal
    law.  ``window`` defaults to the optimal duration of the scenario the
    rates predict.
    """
    p = config.params
    l_pred = scenario(p).l_opt
    T = window if window is not None else optimal_profile(p, l_pred).T
    reps = run_replicas(config, keep_arrivals=True)
    hit = reps.omega >= config.n * p.d
    hits = int(hit.sum())
    if hits < min_hits:
        raise InsufficientHits(f"only {hits} replicas reached the overload (need {min_hits})")
    k, n = p.k, config.n
    span = n * T
    start = reps.t_end - span
    slopes = np.zeros((hits, k))
    tube = np.zeros((hits, k), dtype=bool)
    weights = np.exp(reps.log_lr[hit])
    row = 0
    offset = 0
    for T_, F_, L_, counts in reps.arrivals:
        R = counts.size
        idx = np.nonzero(hit[offset:offset + R])[0]
        offset += R
        for r in idx:
            c = counts[r]
            t_r, f_r, l_r = T_[r, :c], F_[r, :c], L_[r, :c]
            inside = t_r >= start
            for i in range(k):
                m = inside & (f_r == i)
                s_times = np.ascontiguousarray((t_r[m] - start) / n)
                s_sizes = np.ascontiguousarray(l_r[m])
                slopes[row, i] = float(s_sizes.sum()) / n / T
                a_best = _kernels.best_slope(s_times, s_sizes, float(n), float(T))
                a_use = max(a_best, a_min * (1.0 + 1e-12))
                tube[row, i] = _kernels.sup_deviation(s_times, s_sizes, float(n), float(T), a_use) < eps
            row += 1
    hot = slopes > a_min
    wsum = weights.sum()
    wavg = lambda x: float(np.dot(weights, x) / wsum)
    n_hot = hot.sum(axis=1)
    solitary = hot[:, 0] & (n_hot == 1)
    collective = n_hot == k
    if l_pred == 1:
        match = solitary
    elif l_pred == k:
        match = collective
    else:
        match = hot[:, 0] & (n_hot == l_pred)
    census = CensusResult(
        l_predicted=l_pred, hits=hits, window=T, a_min=a_min, eps=eps,
        overheated=np.array([wavg(hot[:, i]) for i in range(k)]),
        tube=np.array([wavg(tube[:, i]) for i in range(k)]),
        slopes=np.array([wavg(slopes[:, i]) for i in range(k)]),
        count_freq=np.array([wavg(n_hot == c) for c in range(k + 1)]),
        solitary=wavg(solitary), collective=wavg(collective), matches_prediction=wavg(match),
        unweighted_solitary=float(solitary.mean()), unweighted_collective=float(collective.mean()),
    )
    return _result(config, reps, census)


def event_log(config: SimConfig, replica: int = 0) -> list[Event]:
    """Arrival-by-arrival record of one replica, replayed through :class:`NetworkState`."""
    reps = run_replicas(config, keep_arrivals=True)
    offset = 0
    for T_, F_, L_, counts in reps.arrivals:
        if replica < offset + counts.size:
            r = replica - offset
            st = NetworkState(config.params.k)
            out = []
            for e in range(counts[r]):
                srv, seen = st.arrive(float(T_[r, e]), int(F_[r, e]), float(L_[r, e]))
                out.append(Event(float(T_[r, e]), int(F_[r, e]), srv, float(L_[r, e]), seen))
            return out
        offset += counts.size
    raise DomainError(f"replica {replica} out of range")
