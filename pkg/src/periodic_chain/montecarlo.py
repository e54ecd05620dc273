"""Exact path simulation of the forced two-state chain.

Each path owns a Philox stream keyed by its 64-bit seed, so a path is
reproducible on its own and ensembles do not depend on how paths are split
across workers.  Holding times are sampled

* by inversion of the integrated hazard for constant and half-period rates,
* by thinning against ``L = max(sup phi_minus, sup phi_plus)`` otherwise.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .pspm import Pspm
from .rates import RateSpec, eval_rates, rate_bounds

MASK64 = (1 << 64) - 1
DEFAULT_CAP = 10 ** 8
# initial-state draws use a counter range no path stream reaches
_INIT_COUNTER = [0, 0, 0, 1 << 63]


class ResourceCapError(RuntimeError):
    """Expected number of simulated events exceeds the configured cap."""


class MonteCarloWarning(UserWarning):
    pass


def _stream(seed):
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))


@dataclass(frozen=True, eq=False)
class PathSample:
    seed: int
    initial_state: int
    horizon: float
    jump_times: np.ndarray
    final_state: int
    n_up: int

    @property
    def n_jumps(self):
        return int(self.jump_times.size)

    def time_in_minus(self):
        """Total time spent in state -1 on ``[0, horizon]``."""
        edges = np.concatenate([[0.0], self.jump_times, [self.horizon]])
        spans = np.diff(edges)
        first = 0 if self.initial_state == -1 else 1
        return math.fsum(spans[first::2])

    def holding_times(self):
        """Completed sojourns (the censored first/last pieces are dropped)."""
        return np.diff(self.jump_times)

    def __eq__(self, other):
        if not isinstance(other, PathSample):
            return NotImplemented
        return (self.seed, self.initial_state, self.horizon, self.final_state, self.n_up) == (
            other.seed, other.initial_state, other.horizon, other.final_state, other.n_up
        ) and np.array_equal(self.jump_times, other.jump_times)

    __hash__ = None


def expected_event_bound(spec: RateSpec, horizon: float) -> float:
    sup_m, sup_p, _ = rate_bounds(spec)
    return horizon * max(sup_m, sup_p)


def _constant_jumps(spec, gen, state, horizon):
    m, p = spec.param("phi_minus"), spec.param("phi_plus")
    first, second = (m, p) if state == -1 else (p, m)
    # even block length keeps the alternation phase fixed across blocks
    block = 2 * (max(8, int(0.625 * horizon * max(m, p)) + 8))
    rates = np.empty(block)
    rates[0::2], rates[1::2] = first, second
    times = []
    t = 0.0
    with np.errstate(divide="ignore"):
        while t <= horizon:
            ts = t + np.cumsum(gen.standard_exponential(block) / rates)
            times.append(ts)
            t = float(ts[-1])
    ts = np.concatenate(times)
    return ts[ts <= horizon]


def _half_jumps(spec, gen, state, horizon):
    phi0, phi1 = spec.half_levels
    T = spec.period
    half = 0.5 * T
    period_hazard = (phi0 + phi1) * half
    jumps = []
    k, r = 0, 0.0  # current time is k*T + r
    while True:
        E = float(gen.standard_exponential())
        while True:
            first = r < half
            rate = (phi0 if first else phi1) if state == -1 else (phi1 if first else phi0)
            end = half if first else T
            piece = rate * (end - r)
            if E <= piece:
                r += E / rate
                break
            E -= piece
            r = end
            if r >= T:
                k += 1
                r = 0.0
                skip = math.floor(E / period_hazard)
                if skip:
                    k += skip
                    E -= skip * period_hazard
        if r >= T:
            k, r = k + 1, r - T
        t = k * T + r
        if t > horizon:
            break
        jumps.append(t)
        state = -state
    return np.array(jumps)


def _thinned_jumps(spec, gen, state, horizon):
    sup_m, sup_p, _ = rate_bounds(spec)
    L = max(sup_m, sup_p)
    if L == 0:
        return np.empty(0)
    block = max(16, int(1.25 * horizon * L) + 16)
    cand = []
    t = 0.0
    while t <= horizon:
        ts = t + np.cumsum(gen.standard_exponential(block)) / L
        cand.append(ts)
        t = float(ts[-1])
    ts = np.concatenate(cand)
    ts = ts[ts <= horizon]
    u = gen.random(ts.size) * L
    m, p = eval_rates(spec, ts)
    acc_m = (u < m).tolist()
    acc_p = (u < p).tolist()
    keep = []
    for i in range(ts.size):
        if (acc_m[i] if state == -1 else acc_p[i]):
            keep.append(i)
            state = -state
    return ts[keep]


def sample_path(spec: RateSpec, seed: int, initial_state: int = -1, horizon: float = 1.0,
                cap: float = DEFAULT_CAP) -> PathSample:
    """One trajectory on ``[0, horizon]``; deterministic in ``(spec, seed, initial_state, horizon)``."""
    if initial_state not in (-1, 1):
        raise ValueError("initial_state must be -1 or +1")
    if not (math.isfinite(horizon) and horizon > 0):
        raise ValueError("horizon must be finite and > 0")
    bound = expected_event_bound(spec, horizon)
    if bound > cap:
        raise ResourceCapError(f"expected up to {bound:.3g} events, cap is {cap:.3g}")
    gen = _stream(seed)
    if spec.kind == "constant":
        jumps = _constant_jumps(spec, gen, initial_state, horizon)
    elif spec.kind in ("half_period", "arrhenius_half"):
        jumps = _half_jumps(spec, gen, initial_state, horizon)
    else:
        jumps = _thinned_jumps(spec, gen, initial_state, horizon)
    jumps = np.ascontiguousarray(jumps, dtype=float)
    jumps.setflags(write=False)
    n = jumps.size
    final = initial_state if n % 2 == 0 else -initial_state
    n_up = (n + 1) // 2 if initial_state == -1 else n // 2
    return PathSample(int(seed) & MASK64, initial_state, float(horizon), jumps, final, n_up)


def stationary_initial_state(spec: RateSpec, seed: int) -> int:
    """State at time 0 drawn from the periodic stationary law, from a reserved part of the path stream."""
    u = np.random.Generator(np.random.Philox(key=int(seed) & MASK64, counter=_INIT_COUNTER)).random()
    return -1 if u < Pspm.from_spec(spec).mu_minus_zero else 1


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    n_paths: int
    horizon: float
    period: float
    initial: str
    mean_rate: float
    mean_rate_se: float
    per_period_mean: float
    per_period_se: float
    occupation_minus: float
    occupation_se: float
    empirical_mgf: dict
    seeds: np.ndarray = field(repr=False)
    n_up: np.ndarray = field(repr=False)
    final_state: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "n_paths": self.n_paths,
            "horizon": self.horizon,
            "period": self.period,
            "initial": self.initial,
            "mean_rate": self.mean_rate,
            "mean_rate_se": self.mean_rate_se,
            "per_period_mean": self.per_period_mean,
            "per_period_se": self.per_period_se,
            "occupation_minus": self.occupation_minus,
            "occupation_se": self.occupation_se,
            "empirical_mgf": [{"eta": eta, "estimate": est, "se": se}
                              for eta, (est, se) in self.empirical_mgf.items()],
        }


def _mean_se(x):
    """Mean and standard error; exactly rounded sums make this order-independent."""
    x = np.asarray(x, dtype=float)
    n = x.size
    mean = math.fsum(x) / n
    var = math.fsum((x - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def _run_chunk(args):
    spec, seeds, horizon, initial, cap = args
    n_up = np.empty(len(seeds), dtype=np.int64)
    final = np.empty(len(seeds), dtype=np.int8)
    occ = np.empty(len(seeds))
    for j, s in enumerate(seeds):
        x0 = stationary_initial_state(spec, s) if initial == "stationary" else int(initial)
        path = sample_path(spec, s, x0, horizon, cap)
        n_up[j] = path.n_up
        final[j] = path.final_state
        occ[j] = path.time_in_minus() / horizon
    return n_up, final, occ


def path_seeds(base_seed: int, n_paths: int):
    return [(int(base_seed) ^ i) & MASK64 for i in range(n_paths)]


def ensemble_stats(spec: RateSpec, n_paths: int, horizon: float, eta_list=(), base_seed: int = 0,
                   workers: int = 1, initial="stationary", cap: float = DEFAULT_CAP) -> EnsembleStats:
    """Statistics of the up-crossing count over ``n_paths`` independent paths.

    Path ``i`` uses seed ``base_seed ^ i``.  ``initial`` is ``"stationary"``
    (draw the state at time 0 from the periodic stationary law) or a fixed
    state ``-1``/``+1``.
    """
    if n_paths < 100:
        raise ValueError("n_paths must be >= 100")
    if not (math.isfinite(horizon) and horizon > 0):
        raise ValueError("horizon must be finite and > 0")
    if initial not in ("stationary", -1, 1):
        raise ValueError("initial must be 'stationary', -1 or 1")
    for eta in eta_list:
        if not eta > 0:
            raise ValueError("eta values must be > 0")
    bound = expected_event_bound(spec, horizon)
    if bound > cap:
        raise ResourceCapError(f"expected up to {bound:.3g} events per path, cap is {cap:.3g}")
    seeds = path_seeds(base_seed, n_paths)
    workers = max(1, int(workers or os.cpu_count() or 1))
    if workers == 1:
        n_up, final, occ = _run_chunk((spec, seeds, horizon, initial, cap))
    else:
        bounds = np.linspace(0, n_paths, min(n_paths, 4 * workers) + 1).astype(int)
        chunks = [(spec, seeds[a:b], horizon, initial, cap) for a, b in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, chunks))
        n_up = np.concatenate([p[0] for p in parts])
        final = np.concatenate([p[1] for p in parts])
        occ = np.concatenate([p[2] for p in parts])

    periods = horizon / spec.period
    rate, rate_se = _mean_se(n_up / horizon)
    per, per_se = _mean_se(n_up / periods)
    occ_mean, occ_se = _mean_se(occ)
    mgf = {}
    for eta in eta_list:
        eta = float(eta)
        with np.errstate(over="ignore"):
            vals = np.power(eta, n_up.astype(float))
        est, se = _mean_se(vals)
        if not (math.isfinite(est) and math.isfinite(se)):
            warnings.warn(f"MGF estimate at eta={eta} overflowed", MonteCarloWarning, stacklevel=2)
        elif est > 0 and se / est > 0.5:
            warnings.warn(f"MGF estimate at eta={eta} has relative standard error {se / est:.2f}",
                          MonteCarloWarning, stacklevel=2)
        mgf[eta] = (est, se)
    seeds_arr = np.array(seeds, dtype=np.uint64)
    for a in (seeds_arr, n_up, final):
        a.setflags(write=False)
    return EnsembleStats(n_paths, float(horizon), spec.period, str(initial), rate, rate_se, per,
                         per_se, occ_mean, occ_se, mgf, seeds_arr, n_up, final)


__all__ = [
    "PathSample", "EnsembleStats", "ResourceCapError", "MonteCarloWarning", "sample_path",
    "stationary_initial_state", "ensemble_stats", "path_seeds", "expected_event_bound",
]
