"""Replicated experiments: event frequencies, explosion histograms, and the
paired experiments behind the delay/instantaneous equivalence and the
extinction dichotomy.

Replica i always runs on seed base_seed + i, and aggregation is a pure fold
over per-replica outcomes, so reports are bitwise independent of how replicas
are distributed over worker processes.  Integration faults are tallied
separately from stopping events; they only shrink the frequency denominator
when they exceed a 0.1% budget, in which case the whole report is flagged
invalid rather than silently reweighted.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .catalog import population
from .comparison import bound_constants
from .noise import BLOCK_SIZE, NoiseSource
from .sde import IntegratorConfig, SdeProblem, freeze_delay, simulate_sde
from .sdde import build_initial_from_constant, simulate_sdde
from .types import (
    EventKind,
    Fault,
    IntegrationFaultError,
    ModelSpec,
    Segment,
    StoppingEvent,
)

__all__ = [
    "Z_95",
    "FAULT_BUDGET",
    "wilson_interval",
    "config_fingerprint",
    "MCReport",
    "ExplosionHistogram",
    "SdeEventRunner",
    "SddeEventRunner",
    "BlowUpBefore",
    "Extinguished",
    "collect_events",
    "report_from_events",
    "estimate_event",
    "explosion_histogram",
    "write_histogram_csv",
    "EquivalenceResult",
    "equivalence_experiment",
    "dichotomy_experiment",
]

#: two-sided 95% normal quantile, fixed so fingerprinted reports never move
Z_95 = 1.959963984540054

#: fraction of faulted replicas beyond which a report is marked invalid
FAULT_BUDGET = 1e-3


def wilson_interval(hits: int, n: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson 95% score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError(f"need a positive number of trials, got {n}")
    if not 0 <= hits <= n:
        raise ValueError(f"hits must lie in [0, {n}], got {hits}")
    p = hits / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def config_fingerprint(payload: Mapping) -> str:
    """Stable hash of the numerical parameters that define an experiment."""
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()


@dataclass(frozen=True)
class MCReport:
    """Frequency estimate with Wilson bounds over n replicas."""

    n_replicas: int
    base_seed: int
    event_counts: dict[str, int]
    hits: int
    denominator: int
    estimate: float
    ci_low: float
    ci_high: float
    n_faults: int
    valid: bool
    fingerprint: str

    def to_json_dict(self) -> dict:
        return {
            "n_replicas": self.n_replicas,
            "base_seed": self.base_seed,
            "event_counts": dict(sorted(self.event_counts.items())),
            "hits": self.hits,
            "denominator": self.denominator,
            "estimate": self.estimate,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n_faults": self.n_faults,
            "valid": self.valid,
            "fingerprint": self.fingerprint,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)


# -- replica runners (picklable, one seed in, one outcome out) ----------------


@dataclass(frozen=True)
class SdeEventRunner:
    problem: SdeProblem
    config: IntegratorConfig
    base_dt: float | None = None

    def __call__(self, seed: int) -> StoppingEvent | Fault:
        noise = NoiseSource(seed, self.base_dt if self.base_dt is not None else self.config.dt_max)
        try:
            return simulate_sde(self.problem, self.config, noise, record_path=False).event
        except IntegrationFaultError as err:
            return err.fault


@dataclass(frozen=True)
class SddeEventRunner:
    model: ModelSpec
    segment: Segment
    config: IntegratorConfig
    base_dt: float | None = None

    def __call__(self, seed: int) -> StoppingEvent | Fault:
        noise = NoiseSource(seed, self.base_dt if self.base_dt is not None else self.config.dt_max)
        try:
            return simulate_sdde(
                self.model, self.segment, self.config, noise, record_path=False
            ).event
        except IntegrationFaultError as err:
            return err.fault


# -- predicates ----------------------------------------------------------------


@dataclass(frozen=True)
class BlowUpBefore:
    """Blow-up strictly before a deadline, optionally of one sign only."""

    deadline: float
    sign: str = "either"  # "plus" | "minus" | "either"

    def __post_init__(self) -> None:
        if self.sign not in ("plus", "minus", "either"):
            raise ValueError(f"sign must be plus/minus/either, got {self.sign!r}")

    def __call__(self, event: StoppingEvent) -> bool:
        if self.sign == "plus":
            ok = event.kind is EventKind.BLOW_UP_PLUS
        elif self.sign == "minus":
            ok = event.kind is EventKind.BLOW_UP_MINUS
        else:
            ok = event.is_blow_up
        return ok and event.time < self.deadline


@dataclass(frozen=True)
class Extinguished:
    def __call__(self, event: StoppingEvent) -> bool:
        return event.kind is EventKind.EXTINCTION


# -- collection and aggregation -------------------------------------------------


def _run_replicas(runner, seeds: Sequence[int]) -> list:
    return [runner(int(s)) for s in seeds]


def collect_events(
    runner: Callable[[int], StoppingEvent | Fault],
    n: int,
    base_seed: int,
    workers: int = 1,
) -> list[StoppingEvent | Fault]:
    """Outcome of replica i on seed base_seed + i, in replica order."""
    if n <= 0:
        raise ValueError(f"need at least one replica, got {n}")
    seeds = range(base_seed, base_seed + n)
    if workers <= 1:
        return _run_replicas(runner, seeds)
    chunk = -(-n // workers)  # ceil division; chunking cannot change results
    pieces = [seeds[i : i + chunk] for i in range(0, n, chunk)]
    out: list = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_replicas, [runner] * len(pieces), pieces):
            out.extend(part)
    return out


def report_from_events(
    events: Sequence[StoppingEvent | Fault],
    predicate: Callable[[StoppingEvent], bool],
    base_seed: int,
    fingerprint_payload: Mapping | None = None,
) -> MCReport:
    """Fold per-replica outcomes into a frequency report."""
    n = len(events)
    counts: Counter[str] = Counter()
    hits = 0
    faults = 0
    for ev in events:
        if isinstance(ev, Fault):
            faults += 1
            counts["Fault"] += 1
            continue
        counts[ev.kind.value] += 1
        if predicate(ev):
            hits += 1
    if faults > FAULT_BUDGET * n:
        denominator = n - faults
        valid = False
    else:
        denominator = n
        valid = True
    if denominator > 0:
        estimate = hits / denominator
        ci_low, ci_high = wilson_interval(hits, denominator)
    else:
        estimate = math.nan
        ci_low = ci_high = math.nan
    return MCReport(
        n_replicas=n,
        base_seed=base_seed,
        event_counts=dict(counts),
        hits=hits,
        denominator=denominator,
        estimate=estimate,
        ci_low=ci_low,
        ci_high=ci_high,
        n_faults=faults,
        valid=valid,
        fingerprint=config_fingerprint(fingerprint_payload or {}),
    )


def estimate_event(
    runner: Callable[[int], StoppingEvent | Fault],
    predicate: Callable[[StoppingEvent], bool],
    n: int,
    base_seed: int,
    *,
    workers: int = 1,
    fingerprint_payload: Mapping | None = None,
) -> MCReport:
    """Frequency of ``predicate`` over n replicas with Wilson 95% bounds."""
    events = collect_events(runner, n, base_seed, workers)
    return report_from_events(events, predicate, base_seed, fingerprint_payload)


# -- explosion histogram ---------------------------------------------------------


@dataclass(frozen=True)
class ExplosionHistogram:
    """Counts of blow-up times in unit bins [k, k+1); everything else is censored."""

    horizon: int
    bins: tuple[int, ...]
    censored: int
    n_faults: int
    n_replicas: int
    base_seed: int
    fingerprint: str

    @property
    def conserved(self) -> bool:
        return sum(self.bins) + self.censored + self.n_faults == self.n_replicas

    def to_json_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "bins": list(self.bins),
            "censored": self.censored,
            "n_faults": self.n_faults,
            "n_replicas": self.n_replicas,
            "base_seed": self.base_seed,
            "fingerprint": self.fingerprint,
        }


def explosion_histogram(
    runner: Callable[[int], StoppingEvent | Fault],
    n: int,
    base_seed: int,
    horizon: float,
    *,
    workers: int = 1,
    fingerprint_payload: Mapping | None = None,
) -> ExplosionHistogram:
    """Histogram of blow-up times over replicas (left-closed unit bins)."""
    n_bins = int(math.ceil(horizon))
    if n_bins < 1:
        raise ValueError(f"horizon must be at least 1 time unit, got {horizon}")
    events = collect_events(runner, n, base_seed, workers)
    bins = [0] * n_bins
    censored = 0
    faults = 0
    for ev in events:
        if isinstance(ev, Fault):
            faults += 1
        elif ev.is_blow_up and ev.time < n_bins:
            bins[int(ev.time)] += 1
        else:
            censored += 1
    return ExplosionHistogram(
        horizon=n_bins,
        bins=tuple(bins),
        censored=censored,
        n_faults=faults,
        n_replicas=n,
        base_seed=base_seed,
        fingerprint=config_fingerprint(fingerprint_payload or {}),
    )


def write_histogram_csv(hist: ExplosionHistogram, path, timestamp: str | None = None) -> None:
    with open(path, "w") as fh:
        if timestamp is not None:
            fh.write(f"# generated={timestamp}\n")
        fh.write("bin_start,count\n")
        for k, c in enumerate(hist.bins):
            fh.write(f"{k},{c}\n")
        fh.write(f"# censored={hist.censored}\n")
        fh.write(f"# faults={hist.n_faults}\n")


# -- paired experiments -----------------------------------------------------------


@dataclass(frozen=True)
class EquivalenceResult:
    """Frequencies on both sides of the delay/instantaneous correspondence.

    Forward direction: if the delay run blows up (in either sign) with
    nonzero frequency, the matching frozen-argument equation must too.
    Converse: if the upper frozen equation blows up, a delay run whose
    history sits at a2 and ramps to x0 must as well.
    """

    a1: float
    a2: float
    sdde_plus: MCReport
    sdde_minus: MCReport
    sde_low_minus: MCReport
    sde_high_plus: MCReport
    sdde_ramp_plus: MCReport
    forward_plus_ok: bool
    forward_minus_ok: bool
    converse_plus_ok: bool

    def to_json_dict(self) -> dict:
        return {
            "a1": self.a1,
            "a2": self.a2,
            "sdde_plus": self.sdde_plus.to_json_dict(),
            "sdde_minus": self.sdde_minus.to_json_dict(),
            "sde_low_minus": self.sde_low_minus.to_json_dict(),
            "sde_high_plus": self.sde_high_plus.to_json_dict(),
            "sdde_ramp_plus": self.sdde_ramp_plus.to_json_dict(),
            "forward_plus_ok": self.forward_plus_ok,
            "forward_minus_ok": self.forward_minus_ok,
            "converse_plus_ok": self.converse_plus_ok,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)


def equivalence_experiment(
    model: ModelSpec,
    phi: Segment,
    config: IntegratorConfig,
    n: int,
    base_seed: int,
    *,
    workers: int = 1,
    ramp_eps: float = 0.1,
    grid: int = 201,
    base_dt: float | None = None,
) -> EquivalenceResult:
    """Blow-up-before-tau frequencies of the delay run and its frozen bounds.

    ``base_dt`` refines the Brownian resolution below dt_max; a fine base
    lets the adaptive step resolve the last rung crossings of an exploding
    path, which the blow-up certificate needs.
    """
    tau = model.delay
    cfg = replace(config, horizon=tau)
    a1, a2 = bound_constants(model, phi.range(), grid=grid)
    x0 = phi.initial_value

    payload = {
        "experiment": "equivalence",
        "model": model.name,
        "params": dict(model.params),
        "a1": a1,
        "a2": a2,
        "x0": x0,
        "dt_max": cfg.dt_max,
        "base_dt": base_dt,
        "tau": tau,
        "ladder_top": cfg.ladder[-1],
        "n": n,
    }

    plus = BlowUpBefore(tau, "plus")
    minus = BlowUpBefore(tau, "minus")

    sdde_events = collect_events(SddeEventRunner(model, phi, cfg, base_dt), n, base_seed, workers)
    low_events = collect_events(
        SdeEventRunner(freeze_delay(model, a1, x0), cfg, base_dt), n, base_seed, workers
    )
    high_events = collect_events(
        SdeEventRunner(freeze_delay(model, a2, x0), cfg, base_dt), n, base_seed, workers
    )
    psi = build_initial_from_constant(a2, x0, ramp_eps, tau)
    ramp_events = collect_events(SddeEventRunner(model, psi, cfg, base_dt), n, base_seed, workers)

    sdde_plus = report_from_events(sdde_events, plus, base_seed, payload)
    sdde_minus = report_from_events(sdde_events, minus, base_seed, payload)
    sde_low_minus = report_from_events(low_events, minus, base_seed, payload)
    sde_high_plus = report_from_events(high_events, plus, base_seed, payload)
    sdde_ramp_plus = report_from_events(ramp_events, plus, base_seed, payload)

    return EquivalenceResult(
        a1=a1,
        a2=a2,
        sdde_plus=sdde_plus,
        sdde_minus=sdde_minus,
        sde_low_minus=sde_low_minus,
        sde_high_plus=sde_high_plus,
        sdde_ramp_plus=sdde_ramp_plus,
        forward_plus_ok=(not sdde_plus.ci_low > 0.0) or sde_high_plus.ci_low > 0.0,
        forward_minus_ok=(not sdde_minus.ci_low > 0.0) or sde_low_minus.ci_low > 0.0,
        converse_plus_ok=(not sde_high_plus.ci_low > 0.0) or sdde_ramp_plus.ci_low > 0.0,
    )


class _BatchIneligible(Exception):
    """The joint fast path cannot reproduce the scalar engine here."""


def _constant_segment_value(segment: Segment) -> float | None:
    """The constant a segment sits at, or None if it actually varies."""
    first = float(segment.values[0])
    if all(float(v) == first for v in segment.values):
        return first
    return None


def _exact_steps(span: float, dt: float) -> int | None:
    """How many dt steps tile ``span`` exactly in floating point, else None.

    Only powers of two qualify: then k*dt, k*dt - span, and the history node
    times all evaluate without rounding, so a fixed-grid run touches exactly
    the same floats as the adaptive engine (whose quantized step is always
    one base increment when base_dt == dt_max).
    """
    if math.frexp(dt)[0] != 0.5:
        return None
    m = round(span / dt)
    if m >= 1 and m * dt == span:
        return m
    return None


# keep the joint history ring under ~3 GB; larger runs take the scalar path
_BATCH_RING_BUDGET = 3_000_000_000


def _population_events_batch(
    a: float,
    b: float,
    p: float,
    history: float,
    config: IntegratorConfig,
    n: int,
    base_seed: int,
    delay_steps: int,
) -> list[StoppingEvent]:
    """All replicas of a constant-history population run, stepped jointly.

    Bitwise-identical to running SddeEventRunner per seed: the grid is fixed
    (one base increment per step, which is what the adaptive policy yields
    whenever the coefficients stay small), every replica consumes the same
    Philox draws it would consume alone, and the update applies the same
    floating-point expression  x + b*dt + s*dw  elementwise.  If any state
    grows large enough that the adaptive policy (or the ladder) could start
    to matter, the batch abandons ship and the caller reruns replica by
    replica.
    """
    base = config.dt_max
    scale = math.sqrt(base)
    horizon = config.horizon
    eps = config.extinction_eps

    # largest |state| for which the scalar policy provably still takes
    # whole dt_max steps and stays far below the ladder top
    threshold = 0.1 / base - 1.0
    gain = abs(a) + abs(b)
    guard = min(
        threshold / (2.0 * gain) if gain > 0.0 else math.inf,
        (threshold / 2.0) ** (1.0 / (2.0 * p)),
        0.1 * config.ladder[-1],
    )
    if abs(history) > guard:
        raise _BatchIneligible("initial history already beyond the fixed-step regime")

    kinds = np.zeros(n, dtype=np.int8)  # 0 alive, 1 extinct, 2 censored
    times = np.zeros(n, dtype=np.float64)

    # mirror the inspection of the initial state before the first step
    if history <= eps:
        return [StoppingEvent.extinction(0.0)] * n
    if 0.0 >= horizon - 1e-12:
        return [StoppingEvent.censored(horizon)] * n

    y = np.full(n, history, dtype=np.float64)
    ring = np.empty((delay_steps, n), dtype=np.float64)
    dwt = np.empty((BLOCK_SIZE, n), dtype=np.float64)
    alive = np.ones(n, dtype=bool)

    k = 0
    while True:
        if k % BLOCK_SIZE == 0:
            window = k // BLOCK_SIZE
            for i in np.nonzero(alive)[0]:
                key = ((base_seed + int(i)) << 64) | window
                gen = np.random.Generator(np.random.Philox(key=key))
                dwt[:, i] = gen.standard_normal(BLOCK_SIZE) * scale
        y_del = ring[k % delay_steps] if k >= delay_steps else history
        bd = a * y_del - b * y
        sg = np.maximum(y, 0.0) ** p
        dw = dwt[k % BLOCK_SIZE]
        y_new = y + bd * base + sg * dw
        ring[k % delay_steps] = y
        k += 1
        t_new = k * base

        newly = alive & (y_new <= eps)
        if newly.any():
            kinds[newly] = 1
            times[newly] = t_new
            alive &= ~newly
        # retired replicas idle at a tame state so they can never trip the
        # guard or revisit the barrier
        y = np.where(alive, y_new, 1.0)
        peak = float(np.max(np.abs(y)))
        if not peak <= guard:  # catches NaN as well
            raise _BatchIneligible(f"state reached {peak} at t={t_new}")
        if t_new >= horizon - 1e-12:
            kinds[alive] = 2
            break
        if not alive.any():
            break

    events: list[StoppingEvent] = []
    for i in range(n):
        if kinds[i] == 1:
            events.append(StoppingEvent.extinction(float(times[i])))
        else:
            events.append(StoppingEvent.censored(horizon))
    return events


def dichotomy_experiment(
    a: float,
    b: float,
    p: float,
    horizon: float,
    n: int,
    base_seed: int,
    *,
    dt_max: float = 1e-3,
    barrier: float = 1e-8,
    phi: Segment | None = None,
    workers: int = 1,
) -> MCReport:
    """Extinction frequency of the population model with noise exponent p.

    The question is only well posed away from the critical exponent 1/2,
    where the boundary classification flips.

    Constant-history runs whose step is a power of two are advanced jointly
    across replicas (a large vectorized speedup); the outcome is
    bitwise-identical to the replica-by-replica path, so ``workers`` only
    ever affects wall-clock time, never results.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"noise exponent p must lie in (0, 1), got {p}")
    if p == 0.5:
        raise ValueError("p = 1/2 is the critical exponent; the dichotomy is undefined there")
    model = population(a, b, p)
    if phi is None:
        phi = Segment.constant(1.0, model.delay)
    config = IntegratorConfig(dt_max=dt_max, horizon=horizon, extinction_eps=barrier)
    payload = {
        "experiment": "dichotomy",
        "a": a,
        "b": b,
        "p": p,
        "horizon": horizon,
        "dt_max": dt_max,
        "barrier": barrier,
        "phi_range": phi.range(),
        "n": n,
    }

    history = _constant_segment_value(phi)
    delay_steps = _exact_steps(model.delay, dt_max)
    if history is not None and delay_steps is not None and delay_steps * n * 8 <= _BATCH_RING_BUDGET:
        try:
            events = _population_events_batch(
                a, b, p, history, config, n, base_seed, delay_steps
            )
        except _BatchIneligible:
            events = None
        if events is not None:
            return report_from_events(events, Extinguished(), base_seed, payload)

    runner = SddeEventRunner(model, phi, config)
    return estimate_event(
        runner, Extinguished(), n, base_seed, workers=workers, fingerprint_payload=payload
    )
