"""Seeded posterior sampling via MCMC and basic convergence diagnostics.

Chains draw their randomness from per-chain sub-seeds spawned from the
master seed, so serial and (hypothetical) parallel execution produce
bit-identical output for a fixed configuration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .model import StatisticalModel, log_surprise


class SamplerStuckError(RuntimeError):
    """Chain rejected every proposal after adaptation."""


class InitializationError(RuntimeError):
    """Posterior kernel not finite at the initial point."""


class DegenerateSeriesError(ValueError):
    """Constant series has no meaningful effective sample size."""


@dataclass(frozen=True)
class SamplerConfig:
    """MCMC configuration; identical config + seed gives identical draws."""

    algorithm: str = "metropolis"  # or "hit-and-run"
    chains: int = 4
    draws: int = 50_000  # retained draws per chain
    burnin: int = 10_000
    thin: int = 1
    scale: Optional[float] = None  # None = auto 2.38 / sqrt(d)
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ("metropolis", "hit-and-run"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.draws < 1000:
            raise ValueError("need at least 1000 retained draws per chain")
        if self.burnin < 0 or self.chains < 1 or self.thin < 1:
            raise ValueError("bad sampler configuration")
        if self.scale is not None and self.scale <= 0:
            raise ValueError("proposal scale must be positive")


@dataclass
class SurpriseSample:
    """Retained posterior draws with aligned per-draw log-surprise values."""

    draws: np.ndarray  # (M_total, d)
    log_surprise: np.ndarray  # (M_total,)
    acceptance_rates: np.ndarray  # per chain
    config: SamplerConfig
    stationarity_flags: np.ndarray = field(default_factory=lambda: np.array([], dtype=bool))

    @property
    def size(self) -> int:
        return self.draws.shape[0]

    @property
    def dimension(self) -> int:
        return self.draws.shape[1]

    def to_csv(self, path) -> None:
        """Write draws + logS as CSV plus a JSON sidecar with the config."""
        header = ",".join([f"theta_{i}" for i in range(self.dimension)] + ["logS"])
        body = np.column_stack([self.draws, self.log_surprise])
        np.savetxt(path, body, delimiter=",", header=header, comments="")
        sidecar = {
            "config": asdict(self.config),
            "acceptance_rates": self.acceptance_rates.tolist(),
            "stationarity_flags": self.stationarity_flags.tolist(),
        }
        with open(str(path) + ".json", "w") as fh:
            json.dump(sidecar, fh, indent=2)

    @classmethod
    def from_csv(cls, path) -> "SurpriseSample":
        body = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        with open(str(path) + ".json") as fh:
            sidecar = json.load(fh)
        return cls(
            draws=body[:, :-1],
            log_surprise=body[:, -1],
            acceptance_rates=np.asarray(sidecar["acceptance_rates"]),
            config=SamplerConfig(**sidecar["config"]),
            stationarity_flags=np.asarray(sidecar.get("stationarity_flags", []), dtype=bool),
        )


def _crude_mode_search(model: StatisticalModel, start: np.ndarray, iters: int = 100) -> np.ndarray:
    """Coordinate search for a rough posterior mode (initialization only)."""
    theta = start.astype(float).copy()
    best = float(model.log_kernel_safe(theta))
    step = np.ones(theta.size)
    for _ in range(iters):
        improved = False
        for i in range(theta.size):
            for sign in (1.0, -1.0):
                cand = theta.copy()
                cand[i] += sign * step[i]
                val = float(model.log_kernel_safe(cand))
                if val > best:
                    theta, best = cand, val
                    improved = True
        if not improved:
            step *= 0.5
            if np.all(step < 1e-10):
                break
    return theta


def _initial_point(model: StatisticalModel) -> np.ndarray:
    if model.mode is not None:
        return np.asarray(model.mode, dtype=float)
    return _crude_mode_search(model, model.space.center())


def sample_posterior(model: StatisticalModel, cfg: SamplerConfig) -> SurpriseSample:
    """Run the configured MCMC sampler and return retained draws with logS."""
    d = model.space.dimension
    start = _initial_point(model)
    if not np.isfinite(model.log_kernel_safe(start)):
        raise InitializationError("posterior kernel not finite at the initial point")

    chol = model.proposal_chol
    if chol is None:
        chol = np.eye(d)
    base_scale = cfg.scale if cfg.scale is not None else 2.38 / math.sqrt(d)
    target = 0.44 if d == 1 else 0.234
    steps = cfg.burnin + cfg.draws * cfg.thin
    hit_and_run = cfg.algorithm == "hit-and-run"

    seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.chains)
    # pre-generate per-chain randomness so chain c is reproducible on its own
    zs = np.empty((steps, cfg.chains, d))
    log_us = np.empty((steps, cfg.chains))
    dirs = np.empty((steps, cfg.chains, d)) if hit_and_run else None
    for c, seq in enumerate(seqs):
        rng = np.random.default_rng(seq)
        zs[:, c, :] = rng.standard_normal((steps, d))
        log_us[:, c] = np.log(rng.random(steps))
        if hit_and_run:
            raw = rng.standard_normal((steps, d))
            dirs[:, c, :] = raw / np.linalg.norm(raw, axis=1, keepdims=True)

    current = np.tile(start, (cfg.chains, 1))
    cur_lk = np.full(cfg.chains, float(model.log_kernel_safe(start)))
    log_scale = np.full(cfg.chains, math.log(base_scale))
    block_acc = np.zeros(cfg.chains)
    accepted_after = np.zeros(cfg.chains)

    retained = np.empty((cfg.chains, cfg.draws, d))
    retained_lk = np.empty((cfg.chains, cfg.draws))
    keep = 0
    block = 50
    for t in range(steps):
        scale = np.exp(log_scale)[:, None]
        if hit_and_run:
            # uniform direction on the sphere; 1-D Metropolis step along it
            step = dirs[t] * (zs[t, :, :1] * scale)
        else:
            step = (zs[t] @ chol.T) * scale
        proposal = current + step
        prop_lk = np.asarray(model.log_kernel_safe(proposal), dtype=float)
        with np.errstate(invalid="ignore"):
            accept = log_us[t] < (prop_lk - cur_lk)
        accept &= np.isfinite(prop_lk)
        current[accept] = proposal[accept]
        cur_lk[accept] = prop_lk[accept]
        block_acc += accept
        if t < cfg.burnin:
            if (t + 1) % block == 0:
                rate = block_acc / block
                log_scale += 0.6 * (rate - target)
                block_acc[:] = 0.0
        else:
            accepted_after += accept
            k = t - cfg.burnin
            if k % cfg.thin == 0:
                retained[:, keep, :] = current
                retained_lk[:, keep] = cur_lk
                keep += 1

    post_steps = steps - cfg.burnin
    rates = accepted_after / max(post_steps, 1)
    if np.any(rates == 0.0):
        raise SamplerStuckError("a chain rejected every proposal after adaptation")

    draws = retained.reshape(cfg.chains * cfg.draws, d)
    # logS = kernel - reference on the retained draws
    ref = model.log_reference_at(draws)
    log_s = retained_lk.reshape(-1) - ref

    # stationarity smoke test (flag, not error): compare per-coordinate
    # means of the two halves of each chain against 4 standard errors
    flags = np.zeros(d, dtype=bool)
    half = cfg.draws // 2
    if half >= 10:
        first = retained[:, :half, :].reshape(-1, d)
        second = retained[:, half:2 * half, :].reshape(-1, d)
        se = np.sqrt(first.var(axis=0) / half + second.var(axis=0) / half) + 1e-300
        flags = np.abs(first.mean(axis=0) - second.mean(axis=0)) > 4.0 * se

    return SurpriseSample(
        draws=draws,
        log_surprise=log_s,
        acceptance_rates=rates,
        config=cfg,
        stationarity_flags=flags,
    )


def _ess_initial_positive(series: np.ndarray) -> float:
    """Geyer initial-positive-sequence ESS of one scalar series."""
    n = series.size
    x = series - series.mean()
    var = float(x @ x) / n
    if var == 0.0:
        raise DegenerateSeriesError("constant series")
    nfft = 1
    while nfft < 2 * n:
        nfft *= 2
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conjugate(f), nfft)[:n].real / n
    rho = acov / acov[0]
    # sum consecutive lag pairs while positive
    tau = 1.0
    k = 1
    while k + 1 < n:
        pair = rho[k] + rho[k + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
        k += 2
    return n / tau


def effective_sample_size(sample: SurpriseSample) -> float:
    """ESS of the log-surprise series, summed over chains, capped at M."""
    if sample.size < 100:
        raise ValueError("need at least 100 draws for an ESS estimate")
    per_chain = sample.config.draws
    chains = sample.config.chains
    if per_chain * chains == sample.size:
        segments = sample.log_surprise.reshape(chains, per_chain)
    else:
        segments = sample.log_surprise[None, :]
    ess = sum(_ess_initial_positive(seg) for seg in segments)
    return float(min(ess, sample.size))
