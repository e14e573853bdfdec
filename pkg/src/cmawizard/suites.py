"""Benchmark suites built from rotated, shifted classical test functions.

A suite is a named sampling context (dimension range, budget range, worker
count, boundedness).  Sampling a suite yields *blocks*: groups of instances
that share dimension, rotation seed, budget and worker count and differ only
in the benchmark function, with exactly one instance per catalog function.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np

from .errors import InvalidDomainError, UnknownSuiteError
from .util import derive_seed

SHIFT_RANGE = 4.0  # optimum drawn uniformly from [-4, 4]^d, inside every box used
DEFAULT_BOX = (-5.0, 5.0)


# ---------------------------------------------------------------------------
# function catalog
# ---------------------------------------------------------------------------


def _sphere(z: np.ndarray) -> np.ndarray:
    return np.sum(z**2, axis=1)


def _ellipsoid(z: np.ndarray) -> np.ndarray:
    d = z.shape[1]
    if d == 1:
        return z[:, 0] ** 2
    exponents = 6.0 * np.arange(d) / (d - 1)
    return np.sum(10.0**exponents * z**2, axis=1)


def _schwefel_12(z: np.ndarray) -> np.ndarray:
    return np.sum(np.cumsum(z, axis=1) ** 2, axis=1)


def _sharp_ridge(z: np.ndarray) -> np.ndarray:
    if z.shape[1] == 1:
        return z[:, 0] ** 2
    return z[:, 0] ** 2 + 100.0 * np.sqrt(np.sum(z[:, 1:] ** 2, axis=1))


def _different_powers(z: np.ndarray) -> np.ndarray:
    d = z.shape[1]
    exponents = 2.0 + (4.0 * np.arange(d) / (d - 1) if d > 1 else np.zeros(1))
    return np.sum(np.abs(z) ** exponents, axis=1)


def _rosenbrock(z: np.ndarray) -> np.ndarray:
    # Shifted so the minimum sits at z = 0 with value 0.
    w = z + 1.0
    if z.shape[1] == 1:
        return z[:, 0] ** 2
    return np.sum(
        100.0 * (w[:, 1:] - w[:, :-1] ** 2) ** 2 + (1.0 - w[:, :-1]) ** 2, axis=1
    )


def _rastrigin(z: np.ndarray) -> np.ndarray:
    d = z.shape[1]
    return 10.0 * d + np.sum(z**2 - 10.0 * np.cos(2.0 * np.pi * z), axis=1)


def _ackley(z: np.ndarray) -> np.ndarray:
    d = z.shape[1]
    rms = np.sqrt(np.sum(z**2, axis=1) / d)
    cos_mean = np.sum(np.cos(2.0 * np.pi * z), axis=1) / d
    return 20.0 + np.e - 20.0 * np.exp(-0.2 * rms) - np.exp(cos_mean)


def _griewank(z: np.ndarray) -> np.ndarray:
    d = z.shape[1]
    denom = np.sqrt(np.arange(1, d + 1))
    return 1.0 + np.sum(z**2, axis=1) / 4000.0 - np.prod(np.cos(z / denom), axis=1)


@dataclass(frozen=True)
class FunctionDescriptor:
    """One base function: pure mapping from centred coordinates to loss."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    rotated: bool
    tags: tuple[str, ...]


_CATALOG: tuple[FunctionDescriptor, ...] = (
    FunctionDescriptor("sphere", _sphere, False, ("unimodal", "separable")),
    FunctionDescriptor("ellipsoid", _ellipsoid, False, ("unimodal", "separable", "ill-conditioned")),
    FunctionDescriptor("rotated-ellipsoid", _ellipsoid, True, ("unimodal", "ill-conditioned")),
    FunctionDescriptor("schwefel-1.2", _schwefel_12, False, ("unimodal", "ill-conditioned")),
    FunctionDescriptor("sharp-ridge", _sharp_ridge, True, ("unimodal", "ridge")),
    FunctionDescriptor("different-powers", _different_powers, True, ("unimodal", "ill-conditioned")),
    FunctionDescriptor("rosenbrock", _rosenbrock, False, ("valley",)),
    FunctionDescriptor("rastrigin", _rastrigin, True, ("multimodal",)),
    FunctionDescriptor("ackley", _ackley, True, ("multimodal",)),
    FunctionDescriptor("griewank", _griewank, True, ("multimodal",)),
)

_BY_NAME = {f.name: f for f in _CATALOG}


def function_catalog() -> list[FunctionDescriptor]:
    """All base functions, in the canonical order used when building blocks."""
    return list(_CATALOG)


# ---------------------------------------------------------------------------
# instances and blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InstanceSpec:
    """One benchmark instance: function, dimension, rotation/shift seed, budget."""

    function_id: str
    dimension: int
    rotation_seed: int
    budget: int
    num_workers: int = 1
    fully_bounded: bool = False
    box: tuple | None = None  # (lo, hi) floats, or per-coordinate ((lo, hi), ...)

    def __post_init__(self):
        if self.function_id not in _BY_NAME:
            raise UnknownSuiteError(f"unknown function id: {self.function_id!r}")
        if self.dimension < 1 or self.budget < 1 or self.num_workers < 1:
            raise InvalidDomainError("dimension, budget and num_workers must be >= 1")
        if self.fully_bounded != (self.box is not None):
            raise InvalidDomainError("fully_bounded must match presence of box")
        if self.box is not None:
            lower, upper = box_arrays(self.box, self.dimension)
            if np.any(lower >= upper):
                raise InvalidDomainError("degenerate box: lower >= upper")

    def key(self) -> str:
        """Stable short hash identifying this instance across processes."""
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    def to_dict(self) -> dict:
        return {
            "function_id": self.function_id,
            "dimension": self.dimension,
            "rotation_seed": self.rotation_seed,
            "budget": self.budget,
            "num_workers": self.num_workers,
            "fully_bounded": self.fully_bounded,
            "box": None if self.box is None else _box_to_json(self.box),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InstanceSpec":
        box = d.get("box")
        return cls(
            function_id=d["function_id"],
            dimension=int(d["dimension"]),
            rotation_seed=int(d["rotation_seed"]),
            budget=int(d["budget"]),
            num_workers=int(d.get("num_workers", 1)),
            fully_bounded=bool(d.get("fully_bounded", False)),
            box=None if box is None else _box_from_json(box),
        )


def _box_to_json(box) -> list:
    if isinstance(box[0], (tuple, list)):
        return [[float(lo), float(hi)] for lo, hi in box]
    return [float(box[0]), float(box[1])]


def _box_from_json(box) -> tuple:
    if isinstance(box[0], list):
        return tuple((float(lo), float(hi)) for lo, hi in box)
    return (float(box[0]), float(box[1]))


def box_arrays(box, dimension: int) -> tuple[np.ndarray, np.ndarray]:
    """Expand a box spec into per-coordinate (lower, upper) arrays."""
    if isinstance(box[0], (tuple, list)):
        arr = np.asarray(box, dtype=float)
        if arr.shape != (dimension, 2):
            raise InvalidDomainError(
                f"box has {arr.shape[0]} coordinate ranges, expected {dimension}"
            )
        return arr[:, 0].copy(), arr[:, 1].copy()
    lo, hi = float(box[0]), float(box[1])
    return np.full(dimension, lo), np.full(dimension, hi)


@dataclass(frozen=True)
class Block:
    """Instances identical except for the benchmark function."""

    instances: tuple[InstanceSpec, ...]

    def __post_init__(self):
        first = self.instances[0]
        shared = ("dimension", "rotation_seed", "budget", "num_workers", "fully_bounded", "box")
        for inst in self.instances[1:]:
            if any(getattr(inst, a) != getattr(first, a) for a in shared):
                raise InvalidDomainError("block instances must differ only in function")

    @property
    def dimension(self) -> int:
        return self.instances[0].dimension

    @property
    def budget(self) -> int:
        return self.instances[0].budget

    @property
    def rotation_seed(self) -> int:
        return self.instances[0].rotation_seed


def make_block(dimension, rotation_seed, budget, num_workers=1, box=None) -> Block:
    instances = tuple(
        InstanceSpec(
            function_id=f.name,
            dimension=dimension,
            rotation_seed=rotation_seed,
            budget=budget,
            num_workers=num_workers,
            fully_bounded=box is not None,
            box=box,
        )
        for f in _CATALOG
    )
    return Block(instances)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


@lru_cache(maxsize=512)
def _shift(rotation_seed: int, dimension: int) -> np.ndarray:
    # Standard normal per coordinate, clipped so the optimum stays inside
    # every box used; most mass near the center keeps the step-size scale a
    # meaningfully tunable parameter.
    rng = np.random.default_rng(derive_seed(rotation_seed, "shift"))
    vec = np.clip(rng.standard_normal(dimension), -SHIFT_RANGE, SHIFT_RANGE)
    vec.setflags(write=False)
    return vec


@lru_cache(maxsize=8)
def _rotation(rotation_seed: int, dimension: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix: QR of a Gaussian, sign-corrected."""
    rng = np.random.default_rng(derive_seed(rotation_seed, "rotation"))
    gauss = rng.standard_normal((dimension, dimension))
    q, r = np.linalg.qr(gauss)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    q.setflags(write=False)
    return q


def evaluate_many(spec: InstanceSpec, points: np.ndarray) -> np.ndarray:
    """Losses for a batch of points, shape (n, dimension)."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if x.shape[1] != spec.dimension:
        raise InvalidDomainError(
            f"point dimension {x.shape[1]} != instance dimension {spec.dimension}"
        )
    if spec.box is not None:
        lower, upper = box_arrays(spec.box, spec.dimension)
        x = np.clip(x, lower, upper)
    z = x - _shift(spec.rotation_seed, spec.dimension)
    desc = _BY_NAME[spec.function_id]
    if desc.rotated:
        z = z @ _rotation(spec.rotation_seed, spec.dimension).T
    return desc.fn(z)


def evaluate(spec: InstanceSpec, x) -> float:
    return float(evaluate_many(spec, np.asarray(x, dtype=float)[None, :])[0])


def optimum_of(spec: InstanceSpec) -> np.ndarray:
    """The planted optimum of the instance (loss 0 by construction)."""
    return np.array(_shift(spec.rotation_seed, spec.dimension))


def rotation_of(spec: InstanceSpec) -> np.ndarray:
    desc = _BY_NAME[spec.function_id]
    if not desc.rotated:
        return np.eye(spec.dimension)
    return np.array(_rotation(spec.rotation_seed, spec.dimension))


# ---------------------------------------------------------------------------
# suite contexts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SuiteSpec:
    """Sampling context for one suite row."""

    name: str
    dim_range: tuple[int, int]
    budget_range: tuple[int, int]
    num_workers: int = 1
    box: tuple | None = None


def _max_popsize(dim_hi: int) -> int:
    # Largest population over the tunable range (factor 9); budgets below
    # this would make the engine reject the instance outright.
    return int(math.floor(4 + 9 * math.log(dim_hi)))


def _row(name, dims, budgets, workers=1, box=None) -> SuiteSpec:
    lo = max(budgets[0], _max_popsize(dims[1]) + 1)
    if lo > budgets[1]:
        raise InvalidDomainError(f"suite {name}: budget range collapsed")
    return SuiteSpec(name, dims, (lo, budgets[1]), workers, box)


TRAINING_SUITES = ("YABBOB", "YASMALLBBOB", "YATUNINGBBOB", "YAPARABBOB", "YABOUNDEDBBOB")
TEST_SUITES = ("YABIGBBOB", "YABOXBBOB", "YAHDBBOB")

DEFAULT_HD_DIM_CAP = 1000
MAX_HD_DIM_CAP = 3000


def suite_spec(name: str, dim_cap: int | None = None) -> SuiteSpec:
    """Look up a suite row; ``dim_cap`` adjusts YAHDBBOB's upper dimension."""
    rows = {
        "YABBOB": lambda: _row("YABBOB", (2, 50), (50, 12800)),
        "YASMALLBBOB": lambda: _row("YASMALLBBOB", (2, 50), (1, 49)),
        "YATUNINGBBOB": lambda: _row("YATUNINGBBOB", (2, 15), (1, 49)),
        "YAPARABBOB": lambda: _row("YAPARABBOB", (2, 50), (50, 12800), workers=100),
        "YABOUNDEDBBOB": lambda: _row("YABOUNDEDBBOB", (2, 40), (50, 300), box=DEFAULT_BOX),
        "YABIGBBOB": lambda: _row("YABIGBBOB", (2, 50), (40000, 320000)),
        "YABOXBBOB": lambda: _row("YABOXBBOB", (2, 50), (50, 300), box=DEFAULT_BOX),
        "YAHDBBOB": lambda: _row(
            "YAHDBBOB", (100, min(dim_cap or DEFAULT_HD_DIM_CAP, MAX_HD_DIM_CAP)), (50, 12800)
        ),
    }
    try:
        return rows[name]()
    except KeyError:
        raise UnknownSuiteError(
            f"unknown suite {name!r}; choose from {TRAINING_SUITES + TEST_SUITES}"
        ) from None


def all_suite_names() -> tuple[str, ...]:
    return TRAINING_SUITES + TEST_SUITES


def _log_uniform_int(rng: np.random.Generator, lo: int, hi: int) -> int:
    if lo == hi:
        return lo
    value = math.exp(rng.uniform(math.log(lo), math.log(hi)))
    return int(min(hi, max(lo, round(value))))


def generate_suite(suite: SuiteSpec, n_blocks: int, seed: int) -> list[Block]:
    """Sample blocks from the suite context; deterministic in seed."""
    rng = np.random.default_rng(derive_seed(seed, suite.name, "blocks"))
    blocks = []
    for _ in range(n_blocks):
        dim = _log_uniform_int(rng, *suite.dim_range)
        budget = _log_uniform_int(rng, *suite.budget_range)
        rotation_seed = int(rng.integers(0, 2**63))
        blocks.append(
            make_block(
                dimension=dim,
                rotation_seed=rotation_seed,
                budget=budget,
                num_workers=suite.num_workers,
                box=suite.box,
            )
        )
    return blocks


def order_blocks(blocks: Iterable[Block]) -> list[Block]:
    """Stable sort by increasing budget first, increasing dimension second."""
    return sorted(blocks, key=lambda b: (b.budget, b.dimension))
