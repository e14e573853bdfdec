import pytest

from cmawizard.engine import CmaConfig
from cmawizard.errors import InvalidDomainError, RegistryError
from cmawizard.suites import InstanceSpec
from cmawizard.wizard import (
    CONFIG_NAMES,
    ConfigRegistry,
    ProblemDescriptor,
    builtin_configs,
    descriptor_for,
    load_registry,
    registry_text,
    save_registry,
    select_config,
    wizard_run,
)

# Exhaustive boundary truth table: (bounded, budget, dimension, workers) -> name.
TRUTH_TABLE = [
    (True, 49, 15, 20, "CMAbounded"),
    (True, 49, 15, 21, "CMAbounded"),
    (True, 49, 16, 20, "CMAbounded"),
    (True, 49, 16, 21, "CMAbounded"),
    (True, 50, 15, 20, "CMAbounded"),
    (True, 50, 15, 21, "CMAbounded"),
    (True, 50, 16, 20, "CMAbounded"),
    (True, 50, 16, 21, "CMAbounded"),
    (False, 49, 15, 20, "CMAtuning"),
    (False, 49, 15, 21, "CMAtuning"),
    (False, 49, 16, 20, "CMAsmall"),
    (False, 49, 16, 21, "CMAsmall"),
    (False, 50, 15, 20, "CMAstd"),
    (False, 50, 15, 21, "CMApara"),
    (False, 50, 16, 20, "CMAstd"),
    (False, 50, 16, 21, "CMApara"),
]

BUILTIN_VALUES = {
    "CMAstd": ("0.3607", 3, False, False),
    "CMAsmall": ("0.4151", 9, False, False),
    "CMAtuning": ("0.4847", 1, True, False),
    "CMApara": ("0.8905", 8, True, True),
    "CMAbounded": ("1.5884", 1, True, True),
}


class TestSelect:
    @pytest.mark.parametrize("bounded,budget,dim,workers,expected", TRUTH_TABLE)
    def test_truth_table(self, bounded, budget, dim, workers, expected):
        p = ProblemDescriptor(budget, dim, workers, bounded)
        assert select_config(p) == expected

    def test_boundary_examples(self):
        assert select_config(ProblemDescriptor(300, 40, 1, True)) == "CMAbounded"
        assert select_config(ProblemDescriptor(49, 15, 1, False)) == "CMAtuning"
        assert select_config(ProblemDescriptor(49, 16, 1, False)) == "CMAsmall"
        assert select_config(ProblemDescriptor(50, 10, 21, False)) == "CMApara"
        assert select_config(ProblemDescriptor(50, 10, 20, False)) == "CMAstd"

    def test_descriptor_validation(self):
        with pytest.raises(InvalidDomainError):
            ProblemDescriptor(0, 5)
        with pytest.raises(InvalidDomainError):
            ProblemDescriptor(50, 5, 0)


class TestRegistry:
    def test_builtin_values(self):
        configs = builtin_configs()
        assert set(configs) == set(CONFIG_NAMES)
        for name, (scale, factor, elitist, diagonal) in BUILTIN_VALUES.items():
            cfg = configs[name]
            assert repr(cfg.scale) == scale  # byte-exact decimal string
            assert cfg.popsize_factor == factor
            assert cfg.elitist is elitist and cfg.diagonal is diagonal

    def test_registry_text_decimal_strings(self):
        text = registry_text(ConfigRegistry())
        for name, (scale, factor, _, _) in BUILTIN_VALUES.items():
            assert f"[{name}]" in text
            assert f"scale = {scale}" in text
            assert f"popsize_factor = {factor}" in text

    def test_round_trip(self, tmp_path):
        registry = ConfigRegistry().replace(
            "CMAsmall", CmaConfig(scale=0.777, popsize_factor=2, elitist=True, diagonal=False)
        )
        path = tmp_path / "registry.txt"
        save_registry(path, registry)
        assert load_registry(path) == registry
        # Serialization is stable through a second round trip.
        save_registry(tmp_path / "again.txt", load_registry(path))
        assert (tmp_path / "again.txt").read_text() == path.read_text()

    def test_partial_override(self, tmp_path):
        path = tmp_path / "partial.txt"
        path.write_text("[CMAstd]\nscale = 0.5\npopsize_factor = 4\nelitist = True\ndiagonal = False\n")
        with pytest.raises(RegistryError, match="missing configurations"):
            load_registry(path)
        registry = load_registry(path, partial=True)
        assert registry.get("CMAstd") == CmaConfig(0.5, 4, True, False)
        assert registry.get("CMAbounded") == builtin_configs()["CMAbounded"]

    def test_empty_partial_is_builtin(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("# nothing here\n")
        assert load_registry(path, partial=True) == ConfigRegistry()

    def test_out_of_domain_scale_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("[CMAstd]\nscale = 0.05\npopsize_factor = 3\nelitist = False\ndiagonal = False\n")
        with pytest.raises(RegistryError, match=r"\[CMAstd\]"):
            load_registry(path, partial=True)

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("[CMAgiant]\nscale = 1.0\n")
        with pytest.raises(RegistryError, match="CMAgiant"):
            load_registry(path, partial=True)

    def test_unknown_field_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("[CMAstd]\nscale = 1.0\nstep = 2\n")
        with pytest.raises(RegistryError, match="step"):
            load_registry(path, partial=True)

    def test_unknown_name_lookup(self):
        with pytest.raises(RegistryError):
            ConfigRegistry().get("CMAmega")


class TestWizardRun:
    def _bounded_instance(self):
        return InstanceSpec("sphere", 6, 42, 120, fully_bounded=True, box=(-5.0, 5.0))

    def test_bounded_instance_tagged_cmabounded(self):
        inst = self._bounded_instance()
        record = wizard_run(descriptor_for(inst), inst, ConfigRegistry(), seed=1)
        assert record.config_name == "CMAbounded"
        assert record.algorithm == "wizard"

    def test_descriptor_mismatch_rejected(self):
        inst = self._bounded_instance()
        bad = ProblemDescriptor(budget=inst.budget + 1, dimension=inst.dimension,
                                num_workers=1, fully_bounded=True)
        with pytest.raises(InvalidDomainError):
            wizard_run(bad, inst, ConfigRegistry(), seed=1)

    def test_deterministic(self):
        inst = self._bounded_instance()
        p = descriptor_for(inst)
        assert wizard_run(p, inst, seed=5) == wizard_run(p, inst, seed=5)

    def test_dispatch_ignores_rotation_seed(self):
        a = InstanceSpec("sphere", 6, 1, 60)
        b = InstanceSpec("sphere", 6, 2, 60)
        ra = wizard_run(descriptor_for(a), a, seed=0)
        rb = wizard_run(descriptor_for(b), b, seed=0)
        assert ra.config_name == rb.config_name == "CMAstd"

    def test_registry_override_is_used(self):
        inst = InstanceSpec("sphere", 6, 1, 60)
        override = ConfigRegistry().replace("CMAstd", CmaConfig(2.5, 4, True, True))
        record = wizard_run(descriptor_for(inst), inst, override, seed=0)
        assert record.config == CmaConfig(2.5, 4, True, True).to_params()
