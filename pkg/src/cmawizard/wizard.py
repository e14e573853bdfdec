"""Deterministic dispatch between five named CMA configurations.

The selector looks only at a priori problem features (budget, dimension,
worker count, boundedness).  Built-in parameter values can be replaced from a
registry file, so tuned configurations slot in without code changes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .engine import CmaConfig, RunRecord, run
from .errors import InvalidDomainError, RegistryError
from .suites import InstanceSpec

CONFIG_NAMES = ("CMAstd", "CMAsmall", "CMAtuning", "CMApara", "CMAbounded")

REGISTRY_SCHEMA = "# cmawizard registry v1"

_FIELDS = ("scale", "popsize_factor", "elitist", "diagonal")


def builtin_configs() -> dict[str, CmaConfig]:
    """The shipped parameter values for the five named configurations."""
    return {
        "CMAstd": CmaConfig(scale=0.3607, popsize_factor=3, elitist=False, diagonal=False),
        "CMAsmall": CmaConfig(scale=0.4151, popsize_factor=9, elitist=False, diagonal=False),
        "CMAtuning": CmaConfig(scale=0.4847, popsize_factor=1, elitist=True, diagonal=False),
        "CMApara": CmaConfig(scale=0.8905, popsize_factor=8, elitist=True, diagonal=True),
        "CMAbounded": CmaConfig(scale=1.5884, popsize_factor=1, elitist=True, diagonal=True),
    }


@dataclass(frozen=True)
class ProblemDescriptor:
    """A priori features driving the dispatch."""

    budget: int
    dimension: int
    num_workers: int = 1
    fully_bounded: bool = False

    def __post_init__(self):
        if self.budget < 1 or self.dimension < 1 or self.num_workers < 1:
            raise InvalidDomainError("budget, dimension and num_workers must be >= 1")


def descriptor_for(instance: InstanceSpec) -> ProblemDescriptor:
    return ProblemDescriptor(
        budget=instance.budget,
        dimension=instance.dimension,
        num_workers=instance.num_workers,
        fully_bounded=instance.fully_bounded,
    )


def select_config(p: ProblemDescriptor) -> str:
    """Pure dispatch rule over the five named configurations."""
    if p.fully_bounded:
        return "CMAbounded"
    if p.budget < 50:
        return "CMAtuning" if p.dimension <= 15 else "CMAsmall"
    if p.num_workers > 20:
        return "CMApara"
    return "CMAstd"


class ConfigRegistry:
    """Named configurations, defaulting to the built-in values."""

    def __init__(self, configs: dict[str, CmaConfig] | None = None):
        values = builtin_configs()
        if configs is not None:
            for name in configs:
                if name not in values:
                    raise RegistryError(f"unknown configuration name {name!r}")
            values.update(configs)
        self._configs = values

    def get(self, name: str) -> CmaConfig:
        try:
            return self._configs[name]
        except KeyError:
            raise RegistryError(f"unknown configuration name {name!r}") from None

    def replace(self, name: str, config: CmaConfig) -> "ConfigRegistry":
        if name not in self._configs:
            raise RegistryError(f"unknown configuration name {name!r}")
        merged = dict(self._configs)
        merged[name] = config
        return ConfigRegistry(merged)

    def as_dict(self) -> dict[str, CmaConfig]:
        return dict(self._configs)

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfigRegistry) and self._configs == other._configs


def registry_text(registry: ConfigRegistry) -> str:
    """Serialize with byte-stable decimal strings (shortest round-trip repr)."""
    lines = [REGISTRY_SCHEMA]
    for name in CONFIG_NAMES:
        cfg = registry.get(name)
        lines.append(f"[{name}]")
        lines.append(f"scale = {cfg.scale!r}")
        lines.append(f"popsize_factor = {cfg.popsize_factor}")
        lines.append(f"elitist = {cfg.elitist}")
        lines.append(f"diagonal = {cfg.diagonal}")
    return "\n".join(lines) + "\n"


def save_registry(path, registry: ConfigRegistry) -> None:
    Path(path).write_text(registry_text(registry))


def _parse_bool(raw: str, where: str) -> bool:
    if raw == "True":
        return True
    if raw == "False":
        return False
    raise RegistryError(f"{where}: expected True or False, got {raw!r}")


def load_registry(path, partial: bool = False) -> ConfigRegistry:
    """Parse a registry file; unknown names and out-of-domain values fail.

    With ``partial`` set, names missing from the file keep the built-in
    values; otherwise all five sections are required.
    """
    text = Path(path).read_text()
    sections: dict[str, dict] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            if current not in CONFIG_NAMES:
                raise RegistryError(f"line {lineno}: unknown configuration name {current!r}")
            sections[current] = {}
            continue
        if "=" not in line or current is None:
            raise RegistryError(f"line {lineno}: expected 'field = value' inside a section")
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _FIELDS:
            raise RegistryError(f"line {lineno}: unknown field {key!r} in [{current}]")
        sections[current][key] = value

    missing = [name for name in CONFIG_NAMES if name not in sections]
    if missing and not partial:
        raise RegistryError(f"missing configurations: {', '.join(missing)}")

    configs = {}
    for name, fields in sections.items():
        absent = [f for f in _FIELDS if f not in fields]
        if absent:
            raise RegistryError(f"[{name}]: missing fields {', '.join(absent)}")
        try:
            configs[name] = CmaConfig(
                scale=float(fields["scale"]),
                popsize_factor=int(fields["popsize_factor"]),
                elitist=_parse_bool(fields["elitist"], f"[{name}].elitist"),
                diagonal=_parse_bool(fields["diagonal"], f"[{name}].diagonal"),
            )
        except ValueError as exc:
            raise RegistryError(f"[{name}]: {exc}") from None
        except InvalidDomainError as exc:
            raise RegistryError(f"[{name}]: {exc}") from None
    return ConfigRegistry(configs)


def wizard_run(
    p: ProblemDescriptor,
    instance: InstanceSpec,
    registry: ConfigRegistry | None = None,
    seed: int = 0,
    algorithm: str = "wizard",
) -> RunRecord:
    """Dispatch on the descriptor, then run the selected configuration."""
    if (
        p.budget != instance.budget
        or p.dimension != instance.dimension
        or p.fully_bounded != instance.fully_bounded
    ):
        raise InvalidDomainError(
            "descriptor does not match instance (budget, dimension, boundedness)"
        )
    registry = registry or ConfigRegistry()
    name = select_config(p)
    return run(registry.get(name), instance, seed, algorithm=algorithm, config_name=name)
