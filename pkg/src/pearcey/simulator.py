"""Monte Carlo for nonintersecting Brownian bridges.

Independent bridges with diffusion 1/2 (variance sigma/2 over time sigma) are
drawn on a uniform grid and conditioned by rejection: a draw survives only if
adjacent paths stay ordered at every grid time and, between grid times,
survive the exact bridge crossing probability exp(-2 d0 d1 / sigma) of their
gap process (which has variance sigma over a step sigma).

Randomness comes from counter-based Philox streams, one per chunk of
proposals, keyed by (seed, chunk index).  Chunks are reduced in index order,
so results do not depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._parallel import resolve_threads
from .errors import FeasibilityError, ValidationError
from .fredholm import RegionFamily

__all__ = [
    "McConfig",
    "McResult",
    "crossing_probability",
    "sample_avoidance",
    "refinement_pair",
]

MIN_ACCEPTANCE = 1e-4


@dataclass(frozen=True)
class McConfig:
    starts: tuple[float, ...]
    ends: tuple[float, ...]
    steps: int = 64
    budget: int = 100_000
    seed: int = 0
    chunk_size: int = 16_384
    max_proposals: int = 50_000_000

    def __post_init__(self):
        a = tuple(float(v) for v in np.atleast_1d(self.starts))
        b = tuple(float(v) for v in np.atleast_1d(self.ends))
        if len(a) != len(b) or not a:
            raise ValidationError("need the same positive number of starts and ends")
        for name, v in (("starts", a), ("ends", b)):
            if any(q <= p for p, q in zip(v, v[1:])):
                raise ValidationError(f"{name} must be strictly increasing")
        if self.budget < 1000:
            raise ValidationError("budget must be at least 1000 accepted samples")
        if self.steps < 1 or self.chunk_size < 1:
            raise ValidationError("steps and chunk_size must be positive")
        object.__setattr__(self, "starts", a)
        object.__setattr__(self, "ends", b)

    @property
    def n(self) -> int:
        return len(self.starts)


@dataclass(frozen=True)
class McResult:
    estimate: float
    stderr: float
    acceptance_rate: float
    accepted: int
    proposals: int
    steps: int


def crossing_probability(d0, d1, sigma):
    """Probability that a Brownian bridge of variance rate 1 from gap d0 to
    gap d1 over time sigma touches zero: exp(-2 d0 d1 / sigma) for d0, d1 > 0."""
    d0, d1 = np.asarray(d0, float), np.asarray(d1, float)
    out = np.where((d0 > 0) & (d1 > 0), np.exp(-2 * d0 * d1 / sigma), 1.0)
    return float(out) if out.ndim == 0 else out


def _grid_indices(times, steps):
    idx = []
    for t in times:
        k = round(t * steps)
        if not 0 < t < 1 or abs(t * steps - k) > 1e-9:
            raise ValidationError(f"observation time {t} must lie strictly inside (0, 1) on the 1/{steps} grid")
        idx.append(k)
    return idx


def _bridges(rng, config: McConfig, count: int, fine_steps: int):
    """Paths of shape (count, n, fine_steps + 1) on the uniform grid."""
    n = config.n
    dt = 1.0 / fine_steps
    inc = rng.standard_normal((count, n, fine_steps)) * math.sqrt(dt / 2)
    w = np.concatenate([np.zeros((count, n, 1)), np.cumsum(inc, axis=2)], axis=2)
    t = np.linspace(0.0, 1.0, fine_steps + 1)
    a = np.asarray(config.starts)[None, :, None]
    b = np.asarray(config.ends)[None, :, None]
    return a + w - t * w[:, :, -1:] + t * (b - a)


def _survival_log(paths, dt):
    """log of the probability that adjacent paths never meet, per draw; -inf if
    they are out of order at a grid time."""
    if paths.shape[1] < 2:
        return np.zeros(paths.shape[0])
    gaps = np.diff(paths, axis=1)  # (count, n-1, steps+1)
    ordered = np.all(gaps > 0, axis=(1, 2))
    g0, g1 = gaps[:, :, :-1], gaps[:, :, 1:]
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        p = np.exp(-2 * np.clip(g0, 0, None) * np.clip(g1, 0, None) / dt)
        logs = np.sum(np.log1p(-np.minimum(p, 1.0)), axis=(1, 2))
    return np.where(ordered, logs, -np.inf)


def _avoids(paths, regions: RegionFamily, indices):
    ok = np.ones(paths.shape[0], bool)
    for k, col in enumerate(indices):
        x = paths[:, :, col]
        for lo, hi in regions.intervals[k]:
            ok &= ~np.any((x >= lo) & (x <= hi), axis=1)
    return ok


def _chunk(config: McConfig, regions, times, chunk: int, step_list):
    """Tallies (accepted, avoided) per grid in ``step_list`` for one chunk.

    The finest grid is simulated; coarser grids subsample it and reuse the
    same uniform variate, so the estimates share their randomness.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(config.seed, spawn_key=(chunk,))))
    fine = max(step_list)
    paths = _bridges(rng, config, config.chunk_size, fine)
    logu = np.log(rng.random(config.chunk_size))
    out = []
    for steps in step_list:
        stride = fine // steps
        sub = paths[:, :, ::stride]
        accept = logu < _survival_log(sub, 1.0 / steps)
        avoid = _avoids(sub, regions, _grid_indices(times, steps))
        out.append((accept, avoid))
    return out


def _run(config: McConfig, regions: RegionFamily, times, step_list, threads=None):
    times = tuple(float(t) for t in np.atleast_1d(times))
    if regions.m != len(times):
        raise ValidationError("need one observation time per region slice")
    fine = max(step_list)
    if any(fine % s for s in step_list):
        raise ValidationError("grids must nest")
    for s in step_list:
        _grid_indices(times, s)
    workers = resolve_threads(threads)
    accepted = [0] * len(step_list)
    avoided = [0] * len(step_list)
    proposals = [0] * len(step_list)
    done = [False] * len(step_list)
    chunk = 0
    with ThreadPoolExecutor(max_workers=workers) as pool:
        while not all(done):
            batch = list(range(chunk, chunk + workers))
            chunk += workers
            results = list(pool.map(lambda c: _chunk(config, regions, times, c, step_list), batch))
            for res in results:  # index order
                for g, (acc, avo) in enumerate(res):
                    if done[g]:
                        continue
                    need = config.budget - accepted[g]
                    pos = np.flatnonzero(acc)
                    if len(pos) >= need:
                        cut = pos[need - 1] + 1
                        acc, avo = acc[:cut], avo[:cut]
                        done[g] = True
                    accepted[g] += int(acc.sum())
                    avoided[g] += int((acc & avo).sum())
                    proposals[g] += len(acc)
            total = chunk * config.chunk_size
            for g in range(len(step_list)):
                if done[g]:
                    continue
                rate = accepted[g] / max(proposals[g], 1)
                if total >= 10 * config.chunk_size and rate < MIN_ACCEPTANCE:
                    raise FeasibilityError(
                        f"acceptance rate {rate:.2e} below {MIN_ACCEPTANCE}; widen the start/end separation",
                        residual=rate,
                    )
                if proposals[g] >= config.max_proposals:
                    raise FeasibilityError(f"proposal cap reached with {accepted[g]} accepted", residual=rate)
    out = []
    for g, steps in enumerate(step_list):
        p = avoided[g] / accepted[g]
        out.append(McResult(p, math.sqrt(max(p * (1 - p), 0.0) / accepted[g]),
                            accepted[g] / proposals[g], accepted[g], proposals[g], steps))
    return out


def sample_avoidance(config: McConfig, regions: RegionFamily, times, threads=None) -> McResult:
    """Frequency with which the conditioned paths avoid X_k at time tau_k for all k."""
    return _run(config, regions, times, (config.steps,), threads)[0]


def refinement_pair(config: McConfig, regions: RegionFamily, times, threads=None) -> tuple[McResult, McResult]:
    """Estimates on the configured grid and on the grid with half the step,
    driven by the same random numbers."""
    coarse, fine = _run(config, regions, times, (config.steps, 2 * config.steps), threads)
    return coarse, fine
