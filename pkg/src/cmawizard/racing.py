"""Elitist iterated racing over the CMA parameter space.

Candidates race over ordered blocks of instances.  After a warm-up of
``first_test_after_blocks`` blocks, and after every block from then on, every
candidate whose paired t-test against the current best says "significantly
worse" is eliminated.  Surviving elites seed a narrower sampling distribution
for the next iteration.  The whole process is capped by a hard experiment
budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats

from .engine import CmaConfig, run
from .errors import ConfigurationError
from .suites import Block, SuiteSpec, function_catalog, generate_suite, order_blocks
from .util import derive_seed

Runner = Callable[[Mapping, "object", int], float]
"""Signature: (candidate params, instance, seed) -> final recommended loss."""

MAX_INITIAL_CANDIDATES = 50
DEFAULT_N_ELITES = 5


# ---------------------------------------------------------------------------
# parameter space
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RealParam:
    name: str
    lower: float
    upper: float


@dataclass(frozen=True)
class IntParam:
    name: str
    lower: int
    upper: int


@dataclass(frozen=True)
class CatParam:
    name: str
    values: tuple


ParamSpace = Sequence[RealParam | IntParam | CatParam]


def default_cma_space() -> list:
    """The four-parameter CMA search space."""
    return [
        RealParam("scale", 0.1, 10.0),
        IntParam("popsize_factor", 1, 9),
        CatParam("elitist", (True, False)),
        CatParam("diagonal", (True, False)),
    ]


def sample_initial(space: ParamSpace, n: int, seed: int) -> list[dict]:
    """n candidates sampled independently and uniformly from the space."""
    rng = np.random.default_rng(derive_seed(seed, "initial"))
    out = []
    for _ in range(n):
        cand = {}
        for p in space:
            if isinstance(p, RealParam):
                cand[p.name] = float(rng.uniform(p.lower, p.upper))
            elif isinstance(p, IntParam):
                cand[p.name] = int(rng.integers(p.lower, p.upper + 1))
            else:
                cand[p.name] = p.values[int(rng.integers(len(p.values)))]
        out.append(cand)
    return out


def refine(
    elites: Sequence[Mapping], space: ParamSpace, iteration: int, n_new: int, seed: int
) -> list[dict]:
    """Sample candidates around the elites with a shrinking spread.

    Numeric parameters draw from a normal centred on the parent with standard
    deviation (upper-lower)/2^(iteration+1), truncated to the domain;
    categoricals keep the parent value with probability 1 - 0.5^iteration.
    """
    rng = np.random.default_rng(derive_seed(seed, "refine", iteration))
    keep_prob = 1.0 - 0.5**iteration
    out = []
    for _ in range(n_new):
        parent = elites[int(rng.integers(len(elites)))]
        cand = {}
        for p in space:
            if isinstance(p, CatParam):
                if rng.random() < keep_prob:
                    cand[p.name] = parent[p.name]
                else:
                    cand[p.name] = p.values[int(rng.integers(len(p.values)))]
                continue
            sd = (p.upper - p.lower) / 2.0 ** (iteration + 1)
            value = _truncated_normal(rng, float(parent[p.name]), sd, p.lower, p.upper)
            if isinstance(p, IntParam):
                cand[p.name] = int(min(p.upper, max(p.lower, round(value))))
            else:
                cand[p.name] = float(value)
        out.append(cand)
    return out


def _truncated_normal(rng, center, sd, lower, upper, max_tries=64) -> float:
    for _ in range(max_tries):
        value = rng.normal(center, sd)
        if lower < value < upper:
            return value
    return min(upper - 1e-12 * (upper - lower), max(lower + 1e-12 * (upper - lower), center))


# ---------------------------------------------------------------------------
# racing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TunerSettings:
    max_experiments: int = 10000
    first_test_after_blocks: int = 5
    alpha: float = 0.05
    min_survivors: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.first_test_after_blocks < 1:
            raise ConfigurationError("first_test_after_blocks must be >= 1")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigurationError("alpha must lie in (0, 1)")


@dataclass
class RaceState:
    """Mutable racing ledger, carried across iterations of a tune run."""

    alive: list[str] = field(default_factory=list)
    losses: dict[str, list[float]] = field(default_factory=dict)
    blocks_seen: int = 0
    experiments_used: int = 0
    iteration: int = 0
    elites: list[str] = field(default_factory=list)
    log: list[dict] = field(default_factory=list)
    eliminated_at: dict[str, int] = field(default_factory=dict)


def cma_runner(params: Mapping, instance, seed: int) -> float:
    """Default runner: objective value of the point recommended by CMA."""
    return run(CmaConfig.from_params(params), instance, seed).final_loss


def _mean_losses(state: RaceState, ids: Sequence[str]) -> dict[str, float]:
    return {cid: float(np.mean(state.losses[cid])) for cid in ids}


def _eliminate(state: RaceState, settings: TunerSettings) -> None:
    means = _mean_losses(state, state.alive)
    best = min(state.alive, key=lambda cid: (means[cid], cid))
    best_losses = np.asarray(state.losses[best])
    survivors = []
    for cid in state.alive:
        if cid == best:
            survivors.append(cid)
            continue
        diff = np.asarray(state.losses[cid]) - best_losses
        if diff.size < 2 or np.all(diff == 0.0):
            survivors.append(cid)  # zero-variance guard: no information, keep
            continue
        mean_diff = float(diff.mean())
        sd = float(diff.std(ddof=1))
        if sd == 0.0:
            worse_significant = mean_diff > 0.0  # infinite t-statistic
        else:
            t_stat = mean_diff / (sd / math.sqrt(diff.size))
            p_value = 2.0 * float(stats.t.sf(abs(t_stat), diff.size - 1))
            worse_significant = mean_diff > 0.0 and p_value < settings.alpha
        if worse_significant:
            state.eliminated_at[cid] = state.blocks_seen
        else:
            survivors.append(cid)
    state.alive = survivors


def race(
    candidates: Mapping[str, Mapping],
    blocks: Sequence[Block],
    settings: TunerSettings,
    state: RaceState | None = None,
    runner: Runner = cma_runner,
    stop_after: int | None = None,
) -> tuple[list[str], RaceState]:
    """Race candidates over blocks until elimination, blocks or budget stop.

    ``blocks`` must already be in evaluation order.  Every alive candidate
    runs once on every instance of a block before any test; a block that no
    longer fits the budget is not started, so alive candidates always share
    the same instance multiset.
    """
    if len(candidates) < 2:
        raise ConfigurationError("racing needs at least 2 candidates")
    if state is None:
        state = RaceState()
        state.iteration = 1
    limit = min(
        settings.max_experiments, stop_after if stop_after is not None else math.inf
    )
    state.alive = list(candidates)
    state.losses = {cid: [] for cid in candidates}
    state.blocks_seen = 0

    for block_index, block in enumerate(blocks):
        cost = len(state.alive) * len(block.instances)
        if state.experiments_used + cost > limit:
            break
        for inst_index, inst in enumerate(block.instances):
            seed = derive_seed(settings.seed, state.iteration, block_index, inst_index)
            for cid in state.alive:
                loss = float(runner(candidates[cid], inst, seed))
                state.losses[cid].append(loss)
                state.experiments_used += 1
                state.log.append(
                    {
                        "iteration": state.iteration,
                        "block": block_index,
                        "instance": inst.key(),
                        "candidate": cid,
                        "seed": seed,
                        "loss": loss,
                    }
                )
        state.blocks_seen += 1
        if state.blocks_seen >= settings.first_test_after_blocks:
            _eliminate(state, settings)
            # Only stop on the survivor floor once testing has begun, so a
            # two-candidate race still reaches its first elimination test.
            if len(state.alive) <= settings.min_survivors:
                break

    means = _mean_losses(state, state.alive)
    state.elites = sorted(state.alive, key=lambda cid: (means[cid], cid))
    return list(state.alive), state


# ---------------------------------------------------------------------------
# the full tuning loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Elite:
    id: str
    params: dict
    mean_loss: float
    n_instances: int


@dataclass
class TuneResult:
    elites: list[Elite]
    state: RaceState
    n_iterations: int
    candidates: dict[str, dict]


def plan_iterations(space: ParamSpace) -> int:
    """2 + round(log2(number of parameters))."""
    return 2 + round(math.log2(len(space)))


def _planned_candidates(iter_budget: int, instances_per_block: int, settings) -> int:
    per_candidate = instances_per_block * (settings.first_test_after_blocks + 2)
    return min(iter_budget // per_candidate, MAX_INITIAL_CANDIDATES)


def tune(
    space: ParamSpace,
    suite: SuiteSpec,
    settings: TunerSettings,
    runner: Runner = cma_runner,
    n_elites: int = DEFAULT_N_ELITES,
) -> TuneResult:
    """Iterated racing: sample, race, refine, under a hard experiment budget.

    Iteration j receives remaining_budget / (n_iterations - j + 1)
    experiments.  Elites survive into the next iteration's race unchanged.
    """
    n_iter = plan_iterations(space)
    instances_per_block = len(function_catalog())
    state = RaceState()
    registry: dict[str, dict] = {}
    elites: list[Elite] = []

    for j in range(1, n_iter + 1):
        remaining = settings.max_experiments - state.experiments_used
        iter_budget = remaining // (n_iter - j + 1)
        target = _planned_candidates(iter_budget, instances_per_block, settings)
        if j == 1 and target < 2:
            raise ConfigurationError(
                "budget too small: cannot race 2 candidates through the first "
                f"test ({settings.max_experiments} experiments requested)"
            )
        if target < 2:
            break

        if j == 1:
            fresh = sample_initial(space, target, derive_seed(settings.seed, "sample", j))
        else:
            n_new = max(2, target - len(elites))
            fresh = refine(
                [e.params for e in elites],
                space,
                iteration=j - 1,
                n_new=n_new,
                seed=derive_seed(settings.seed, "sample", j),
            )
        candidates = {e.id: e.params for e in elites}
        for k, params in enumerate(fresh):
            candidates[f"i{j:02d}-c{k:03d}"] = params
        registry.update(candidates)

        n_blocks = max(
            settings.first_test_after_blocks + 2,
            iter_budget // (max(settings.min_survivors, 1) * instances_per_block) + 1,
        )
        blocks = order_blocks(
            generate_suite(suite, n_blocks, derive_seed(settings.seed, "instances", j))
        )
        state.iteration = j
        race(
            candidates,
            blocks,
            settings,
            state=state,
            runner=runner,
            stop_after=state.experiments_used + iter_budget,
        )
        means = _mean_losses(state, state.elites)
        elites = [
            Elite(cid, dict(registry[cid]), means[cid], len(state.losses[cid]))
            for cid in state.elites[:n_elites]
        ]

    return TuneResult(elites=elites, state=state, n_iterations=n_iter, candidates=registry)
