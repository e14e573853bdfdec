"""Covariance matrix adaptation with four exposed tuning parameters.

The engine exposes ``scale`` (initial step-size multiplier), ``popsize_factor``
(population growth with dimension), ``elitist`` (keep the best point found so
far in the selection pool) and ``diagonal`` (restrict the covariance to its
diagonal, O(d) work per sample instead of O(d^2)).

Bounded problems are handled by an affine map: the engine samples in a
standardized space where the box maps to one reference step per quarter
box-width, so ``sigma = scale * 1.0`` regardless of domain and the box widths
live in the coordinate map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    BudgetTooSmallError,
    InvalidDomainError,
    InvalidLossError,
    UnknownBaselineError,
)
from .suites import InstanceSpec, box_arrays, evaluate_many
from .util import derive_seed

SCALE_DOMAIN = (0.1, 10.0)
POPSIZE_FACTOR_DOMAIN = (1, 9)

COV_FLOOR = 1e-20  # eigenvalue / diagonal floor, relative to the largest entry

BASELINE_NAMES = ("random-search", "one-plus-one-es", "differential-evolution")


@dataclass(frozen=True)
class CmaConfig:
    """The four tunable parameters, validated against their search domains."""

    scale: float = 1.0
    popsize_factor: int = 3
    elitist: bool = False
    diagonal: bool = False

    def __post_init__(self):
        lo, hi = SCALE_DOMAIN
        if not (lo < float(self.scale) < hi):
            raise InvalidDomainError(f"scale {self.scale} outside ({lo}, {hi})")
        f_lo, f_hi = POPSIZE_FACTOR_DOMAIN
        if int(self.popsize_factor) != self.popsize_factor or not (
            f_lo <= self.popsize_factor <= f_hi
        ):
            raise InvalidDomainError(
                f"popsize_factor {self.popsize_factor} outside integers [{f_lo}, {f_hi}]"
            )

    def to_params(self) -> dict:
        return {
            "scale": float(self.scale),
            "popsize_factor": int(self.popsize_factor),
            "elitist": bool(self.elitist),
            "diagonal": bool(self.diagonal),
        }

    @classmethod
    def from_params(cls, params: Mapping) -> "CmaConfig":
        return cls(
            scale=float(params["scale"]),
            popsize_factor=int(params["popsize_factor"]),
            elitist=bool(params["elitist"]),
            diagonal=bool(params["diagonal"]),
        )


DEFAULT_CONFIG = CmaConfig()


def population_size(config: CmaConfig, dimension: int) -> int:
    """floor(4 + popsize_factor * ln(dimension))."""
    if dimension < 1:
        raise InvalidDomainError("dimension must be >= 1")
    return int(math.floor(4 + config.popsize_factor * math.log(dimension)))


@dataclass
class BestSeen:
    point: np.ndarray | None = None
    loss: float = math.inf


@dataclass(frozen=True)
class RunRecord:
    """One optimizer execution on one instance."""

    algorithm: str
    config: dict | str  # parameter dict for CMA runs, baseline name otherwise
    instance: InstanceSpec
    seed: int
    history: tuple[tuple[int, float], ...]  # best-so-far at recording points
    recommendation: tuple[float, ...]
    final_loss: float
    evals_used: int
    config_name: str | None = None

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "config": self.config,
            "instance": self.instance.to_dict(),
            "seed": int(self.seed),
            "history": [[int(e), float(l)] for e, l in self.history],
            "recommendation": [float(v) for v in self.recommendation],
            "final_loss": float(self.final_loss),
            "evals_used": int(self.evals_used),
            "config_name": self.config_name,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        config = d["config"]
        if isinstance(config, dict):
            config = dict(config)
        return cls(
            algorithm=d["algorithm"],
            config=config,
            instance=InstanceSpec.from_dict(d["instance"]),
            seed=int(d["seed"]),
            history=tuple((int(e), float(l)) for e, l in d["history"]),
            recommendation=tuple(float(v) for v in d["recommendation"]),
            final_loss=float(d["final_loss"]),
            evals_used=int(d["evals_used"]),
            config_name=d.get("config_name"),
        )


class CmaEs:
    """Ask/tell CMA-ES with weighted recombination, CSA and rank-1 + rank-mu
    covariance updates; the diagonal variant keeps only the diagonal and uses
    the separable-CMA learning-rate speedup."""

    def __init__(self, config: CmaConfig, dimension: int, box=None, seed: int = 0):
        if dimension < 1:
            raise InvalidDomainError("dimension must be >= 1")
        self.config = config
        self.dimension = d = int(dimension)

        if box is None:
            self._center = np.zeros(d)
            self._width = np.ones(d)
            self._lower = self._upper = None
        else:
            lower, upper = box_arrays(box, d)
            if np.any(lower >= upper):
                raise InvalidDomainError("degenerate box: lower >= upper")
            self._center = (lower + upper) / 2.0
            self._width = (upper - lower) / 4.0  # reference step per coordinate
            self._lower, self._upper = lower, upper

        self.popsize = population_size(config, d)
        self.mu = self.popsize // 2
        w = np.log(self.mu + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / np.sum(w)
        self.mueff = 1.0 / np.sum(self.weights**2)

        self.c_sigma = (self.mueff + 2) / (d + self.mueff + 5)
        self.d_sigma = (
            1 + 2 * max(0.0, math.sqrt((self.mueff - 1) / (d + 1)) - 1) + self.c_sigma
        )
        self.c_c = (4 + self.mueff / d) / (d + 4 + 2 * self.mueff / d)
        c1 = 2.0 / ((d + 1.3) ** 2 + self.mueff)
        cmu = 2.0 * (self.mueff - 2 + 1 / self.mueff) / ((d + 2) ** 2 + self.mueff)
        if config.diagonal:
            # Separable CMA learns d parameters instead of d(d+1)/2.
            speedup = (d + 2) / 3.0
            c1 = min(1.0, c1 * speedup)
            cmu = cmu * speedup
        self.c_1 = c1
        self.c_mu = min(1.0 - self.c_1, cmu)
        self.chi_n = math.sqrt(d) * (1 - 1 / (4 * d) + 1 / (21 * d * d))

        self.sigma = config.scale * 1.0
        self._zmean = np.zeros(d)
        if config.diagonal:
            self.covariance = np.ones(d)
        else:
            self.covariance = np.eye(d)
            self._basis = np.eye(d)
            self._scales = np.ones(d)  # sqrt eigenvalues
            self._evals_at_decomp = 0
        self.p_sigma = np.zeros(d)
        self.p_c = np.zeros(d)
        self.generation = 0
        self.evals_used = 0
        self.best_seen = BestSeen()
        self.rng = np.random.default_rng(int(seed))

    # -- distribution geometry -------------------------------------------

    @property
    def mean(self) -> np.ndarray:
        """Distribution mean in original coordinates."""
        return self._center + self._width * self._zmean

    def _decompose_if_due(self):
        # Lazy eigendecomposition, refreshed after O(d / (c1 + cmu)) evals.
        gap = self.popsize / (self.c_1 + self.c_mu) / self.dimension / 10.0
        if self.evals_used - self._evals_at_decomp <= gap:
            return
        self._evals_at_decomp = self.evals_used
        cov = (self.covariance + self.covariance.T) / 2.0
        eigvals, basis = np.linalg.eigh(cov)
        floor = COV_FLOOR * max(float(eigvals[-1]), COV_FLOOR)
        eigvals = np.maximum(eigvals, floor)
        self._basis = basis
        self._scales = np.sqrt(eigvals)
        self.covariance = (basis * eigvals) @ basis.T

    def _sample_steps(self, n: int) -> np.ndarray:
        z = self.rng.standard_normal((n, self.dimension))
        if self.config.diagonal:
            return z * np.sqrt(self.covariance)
        return (z * self._scales) @ self._basis.T

    def _to_original(self, zx: np.ndarray) -> np.ndarray:
        return self._center + self._width * zx

    def _to_sampling(self, x: np.ndarray) -> np.ndarray:
        return (x - self._center) / self._width

    # -- ask / tell --------------------------------------------------------

    def ask(self) -> list[np.ndarray]:
        """Sample one population in original coordinates.

        Out-of-box points are resampled up to 10 times, then clipped.
        """
        if not self.config.diagonal:
            self._decompose_if_due()
        steps = self._sample_steps(self.popsize)
        points = self._to_original(self._zmean + self.sigma * steps)
        if self._lower is not None:
            lower, upper = self._lower, self._upper
            for i in range(self.popsize):
                tries = 0
                while tries < 10 and (
                    np.any(points[i] < lower) or np.any(points[i] > upper)
                ):
                    step = self._sample_steps(1)[0]
                    points[i] = self._to_original(self._zmean + self.sigma * step)
                    tries += 1
                np.clip(points[i], lower, upper, out=points[i])
        return [points[i].copy() for i in range(self.popsize)]

    def observe(self, points: Sequence[np.ndarray], losses) -> None:
        """Account for evaluated points without updating the distribution.

        Used for the truncated final generation of a budgeted run.
        """
        losses = np.asarray(losses, dtype=float)
        if not np.all(np.isfinite(losses)):
            raise InvalidLossError("losses must be finite")
        self.evals_used += len(losses)
        best = int(np.argmin(losses))
        if losses[best] < self.best_seen.loss:
            self.best_seen = BestSeen(np.array(points[best], dtype=float), float(losses[best]))

    def tell(self, points: Sequence[np.ndarray], losses) -> dict:
        """Rank the population and update mean, paths, covariance and sigma.

        Returns a small summary dict; ``pool_best_loss`` is the best loss in
        the ranked pool after elitist injection, used by invariant checks.
        """
        losses = np.asarray(losses, dtype=float).copy()
        if len(points) != self.popsize or len(losses) != self.popsize:
            raise ValueError(
                f"expected {self.popsize} points and losses, got {len(points)}/{len(losses)}"
            )
        if not np.all(np.isfinite(losses)):
            raise InvalidLossError("losses must be finite")
        pts = np.array([np.asarray(p, dtype=float) for p in points])

        new_best = int(np.argmin(losses))
        new_best_loss = float(losses[new_best])
        new_best_point = pts[new_best].copy()

        prior = self.best_seen
        if self.config.elitist and prior.point is not None and prior.loss < losses.min():
            worst = int(np.argmax(losses))
            pts[worst] = prior.point
            losses[worst] = prior.loss
        pool_best = float(losses.min())

        d = self.dimension
        zx = self._to_sampling(pts)
        order = np.argsort(losses, kind="stable")
        selected = zx[order[: self.mu]]

        old_mean = self._zmean
        self._zmean = self.weights @ selected
        y_w = (self._zmean - old_mean) / self.sigma

        if self.config.diagonal:
            whitened = y_w / np.sqrt(self.covariance)
        else:
            whitened = self._basis @ ((self._basis.T @ y_w) / self._scales)
        self.p_sigma = (1 - self.c_sigma) * self.p_sigma + math.sqrt(
            self.c_sigma * (2 - self.c_sigma) * self.mueff
        ) * whitened

        ps_norm = float(np.linalg.norm(self.p_sigma))
        expected = math.sqrt(1 - (1 - self.c_sigma) ** (2 * (self.generation + 1)))
        h_sigma = 1.0 if ps_norm / expected < (1.4 + 2 / (d + 1)) * self.chi_n else 0.0
        self.p_c = (1 - self.c_c) * self.p_c + h_sigma * math.sqrt(
            self.c_c * (2 - self.c_c) * self.mueff
        ) * y_w

        steps = (selected - old_mean) / self.sigma
        decay = 1 - self.c_1 - self.c_mu
        missing = (1 - h_sigma) * self.c_c * (2 - self.c_c)
        if self.config.diagonal:
            rank_mu = self.weights @ steps**2
            self.covariance = (
                (decay + self.c_1 * missing) * self.covariance
                + self.c_1 * self.p_c**2
                + self.c_mu * rank_mu
            )
            floor = COV_FLOOR * max(float(self.covariance.max()), COV_FLOOR)
            np.maximum(self.covariance, floor, out=self.covariance)
        else:
            rank_mu = (steps.T * self.weights) @ steps
            self.covariance = (
                (decay + self.c_1 * missing) * self.covariance
                + self.c_1 * np.outer(self.p_c, self.p_c)
                + self.c_mu * rank_mu
            )

        self.sigma *= math.exp((self.c_sigma / self.d_sigma) * (ps_norm / self.chi_n - 1))

        self.generation += 1
        self.evals_used += self.popsize
        if new_best_loss < self.best_seen.loss:
            self.best_seen = BestSeen(new_best_point, new_best_loss)
        return {
            "generation": self.generation,
            "sigma": self.sigma,
            "pool_best_loss": pool_best,
            "best_seen_loss": self.best_seen.loss,
        }


def run(
    config: CmaConfig,
    instance: InstanceSpec,
    seed: int,
    algorithm: str = "cma",
    config_name: str | None = None,
) -> RunRecord:
    """Ask/tell loop until the instance budget is exhausted.

    The final generation is truncated to fit the budget exactly; the
    recommendation is the best point evaluated.
    """
    es = CmaEs(config, instance.dimension, box=instance.box, seed=seed)
    if instance.budget < es.popsize:
        raise BudgetTooSmallError(
            f"budget {instance.budget} < population size {es.popsize}"
        )
    history: list[tuple[int, float]] = []
    while es.evals_used < instance.budget:
        points = es.ask()
        k = min(es.popsize, instance.budget - es.evals_used)
        batch = points[:k]
        losses = evaluate_many(instance, np.asarray(batch))
        if k == es.popsize:
            es.tell(batch, losses)
        else:
            es.observe(batch, losses)
        history.append((es.evals_used, es.best_seen.loss))
    return RunRecord(
        algorithm=algorithm,
        config=config.to_params(),
        instance=instance,
        seed=int(seed),
        history=tuple(history),
        recommendation=tuple(float(v) for v in es.best_seen.point),
        final_loss=float(es.best_seen.loss),
        evals_used=es.evals_used,
        config_name=config_name,
    )


# ---------------------------------------------------------------------------
# baseline optimizers (portfolio stand-ins for comparative rankings)
# ---------------------------------------------------------------------------


def _domain_geometry(instance: InstanceSpec):
    if instance.box is None:
        d = instance.dimension
        return np.zeros(d), np.ones(d), None, None
    lower, upper = box_arrays(instance.box, instance.dimension)
    return (lower + upper) / 2.0, (upper - lower) / 4.0, lower, upper


class _HistoryTracker:
    """Best-so-far bookkeeping shared by the baselines."""

    def __init__(self):
        self.best_point: np.ndarray | None = None
        self.best_loss = math.inf
        self.entries: list[tuple[int, float]] = []

    def update(self, evals: int, point: np.ndarray, loss: float) -> bool:
        improved = loss < self.best_loss
        if improved:
            self.best_point = np.array(point, dtype=float)
            self.best_loss = float(loss)
            self.entries.append((evals, self.best_loss))
        return improved

    def finish(self, evals: int):
        if not self.entries or self.entries[-1][0] != evals:
            self.entries.append((evals, self.best_loss))


def _random_search(instance: InstanceSpec, rng: np.random.Generator) -> _HistoryTracker:
    d = instance.dimension
    _, _, lower, upper = _domain_geometry(instance)
    tracker = _HistoryTracker()
    done = 0
    while done < instance.budget:
        n = min(4096, instance.budget - done)
        if lower is None:
            batch = rng.standard_normal((n, d))
        else:
            batch = rng.uniform(lower, upper, (n, d))
        losses = evaluate_many(instance, batch)
        for i in range(n):
            done += 1
            tracker.update(done, batch[i], float(losses[i]))
    tracker.finish(instance.budget)
    return tracker


def _one_plus_one_es(instance: InstanceSpec, rng: np.random.Generator) -> _HistoryTracker:
    # (1+1)-ES with the memoryless one-fifth rule: grow by e^(1/3) on
    # success, shrink by e^(-1/12) on failure.
    center, width, lower, upper = _domain_geometry(instance)
    tracker = _HistoryTracker()
    x = center.copy()
    loss = float(evaluate_many(instance, x[None, :])[0])
    evals = 1
    tracker.update(evals, x, loss)
    step = 1.0
    while evals < instance.budget:
        cand = x + step * width * rng.standard_normal(instance.dimension)
        if lower is not None:
            np.clip(cand, lower, upper, out=cand)
        cand_loss = float(evaluate_many(instance, cand[None, :])[0])
        evals += 1
        if cand_loss <= loss:
            x, loss = cand, cand_loss
            step *= math.exp(1.0 / 3.0)
            tracker.update(evals, x, loss)
        else:
            step *= math.exp(-1.0 / 12.0)
    tracker.finish(instance.budget)
    return tracker


def _differential_evolution(instance: InstanceSpec, rng: np.random.Generator) -> _HistoryTracker:
    # DE/rand/1/bin with classic F=0.8, CR=0.9.
    d = instance.dimension
    center, width, lower, upper = _domain_geometry(instance)
    np_size = max(4, min(40, 5 * d, instance.budget // 4 or 4))
    tracker = _HistoryTracker()

    if lower is None:
        pop = center + width * rng.standard_normal((np_size, d))
    else:
        pop = rng.uniform(lower, upper, (np_size, d))
    n_init = min(np_size, instance.budget)
    fitness = np.full(np_size, math.inf)
    init_losses = evaluate_many(instance, pop[:n_init])
    evals = 0
    for i in range(n_init):
        evals += 1
        fitness[i] = float(init_losses[i])
        tracker.update(evals, pop[i], fitness[i])

    f_weight, crossover = 0.8, 0.9
    while evals < instance.budget:
        for i in range(np_size):
            if evals >= instance.budget:
                break
            pool = [j for j in range(np_size) if j != i]
            r1, r2, r3 = rng.choice(pool, size=3, replace=False)
            mutant = pop[r1] + f_weight * (pop[r2] - pop[r3])
            mask = rng.random(d) < crossover
            mask[int(rng.integers(d))] = True
            trial = np.where(mask, mutant, pop[i])
            if lower is not None:
                np.clip(trial, lower, upper, out=trial)
            trial_loss = float(evaluate_many(instance, trial[None, :])[0])
            evals += 1
            if trial_loss <= fitness[i]:
                pop[i], fitness[i] = trial, trial_loss
                tracker.update(evals, trial, trial_loss)
    tracker.finish(instance.budget)
    return tracker


_BASELINES = {
    "random-search": _random_search,
    "one-plus-one-es": _one_plus_one_es,
    "differential-evolution": _differential_evolution,
}


def run_baseline(name: str, instance: InstanceSpec, seed: int) -> RunRecord:
    """Run a named baseline optimizer under the same record contract as run()."""
    try:
        algo = _BASELINES[name]
    except KeyError:
        raise UnknownBaselineError(
            f"unknown baseline {name!r}; choose from {BASELINE_NAMES}"
        ) from None
    rng = np.random.default_rng(derive_seed(seed, name))
    tracker = algo(instance, rng)
    return RunRecord(
        algorithm=name,
        config=name,
        instance=instance,
        seed=int(seed),
        history=tuple(tracker.entries),
        recommendation=tuple(float(v) for v in tracker.best_point),
        final_loss=float(tracker.best_loss),
        evals_used=int(instance.budget),
        config_name=None,
    )
