"""Command-line pipeline: sample suites, tune, validate, run, compare, report.

Output layout under --out-dir:

    runs/records.jsonl       append-only run store (resumable)
    elites/<suite>.jsonl     ranked tuned configurations
    elites/<suite>.race.jsonl   one line per tuning experiment
    registries/<suite>.txt   named-configuration registry
    reports/                 delimited tables, text tables and figures
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import reports, store
from .engine import BASELINE_NAMES, CmaConfig, DEFAULT_CONFIG, run, run_baseline
from .errors import CmaWizardError, ConfigurationError
from .evaluation import DEFAULT_CHECKPOINTS, convergence_curves, format_rank_label, score_matrix
from .racing import TunerSettings, default_cma_space, tune
from .suites import all_suite_names, generate_suite, order_blocks, suite_spec
from .util import derive_seed, parallel_map
from .validation import validate
from .wizard import (
    CONFIG_NAMES,
    ConfigRegistry,
    descriptor_for,
    load_registry,
    save_registry,
    wizard_run,
)

SEED_ENV_VAR = "CMAWIZARD_SEED"

# Which registry slot a training suite's validation winner replaces.
SUITE_TO_CONFIG = {
    "YABBOB": "CMAstd",
    "YASMALLBBOB": "CMAsmall",
    "YATUNINGBBOB": "CMAtuning",
    "YAPARABBOB": "CMApara",
    "YABOUNDEDBBOB": "CMAbounded",
}

ALGO_CHOICES = ("wizard", "default") + CONFIG_NAMES + BASELINE_NAMES

_UNSET = object()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=_UNSET)
    common.add_argument("--workers", type=int, default=_UNSET)
    common.add_argument("--out-dir", default=_UNSET)
    common.add_argument("--config", default=_UNSET, help="key=value file; flags take precedence")

    parser = argparse.ArgumentParser(prog="cmawizard", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    suite = sub.add_parser("suite", parents=[common], help="list or sample benchmark suites")
    suite_sub = suite.add_subparsers(dest="suite_command", required=True)
    suite_sub.add_parser("list", parents=[common])
    sample = suite_sub.add_parser("sample", parents=[common])
    sample.add_argument("name")
    sample.add_argument("--blocks", type=int, default=_UNSET)
    sample.add_argument("--dim-cap", type=int, default=_UNSET)

    tune_p = sub.add_parser("tune", parents=[common], help="iterated-racing configuration tuning")
    tune_p.add_argument("--suite", required=True)
    tune_p.add_argument("--max-experiments", type=int, default=_UNSET)
    tune_p.add_argument("--first-test", type=int, default=_UNSET)
    tune_p.add_argument("--alpha", type=float, default=_UNSET)
    tune_p.add_argument("--dim-cap", type=int, default=_UNSET)

    val = sub.add_parser("validate", parents=[common], help="majority-vote winner vs the default")
    val.add_argument("--suite", required=True)
    val.add_argument("--elites", default=_UNSET, help="elites file (default: out-dir/elites/<suite>.jsonl)")
    val.add_argument("--runs", type=int, default=_UNSET)
    val.add_argument("--blocks", type=int, default=_UNSET)
    val.add_argument("--top", type=int, default=_UNSET, help="how many elites to validate")
    val.add_argument("--vote", choices=("runs", "pooled"), default=_UNSET)
    val.add_argument("--dim-cap", type=int, default=_UNSET)

    run_p = sub.add_parser("run", parents=[common], help="run an algorithm over a suite into the store")
    run_p.add_argument("--suite", required=True)
    run_p.add_argument("--algo", required=True, choices=ALGO_CHOICES)
    run_p.add_argument("--blocks", type=int, default=_UNSET)
    run_p.add_argument("--registry", default=_UNSET, help="registry file for named configs")
    run_p.add_argument("--dim-cap", type=int, default=_UNSET)

    cmp_p = sub.add_parser("compare", parents=[common], help="score matrix + curves from the store")
    cmp_p.add_argument("--store", default=_UNSET, help="records file (default: out-dir/runs/records.jsonl)")
    cmp_p.add_argument("--suite", default=_UNSET, help="restrict to one suite's records")
    cmp_p.add_argument("--checkpoints", default=_UNSET, help="comma-separated budget fractions")

    rep = sub.add_parser("report", parents=[common], help="compare plus text tables and figures")
    rep.add_argument("--store", default=_UNSET)
    rep.add_argument("--suite", default=_UNSET)
    rep.add_argument("--checkpoints", default=_UNSET)
    rep.add_argument("--max-rows", type=int, default=_UNSET)

    return parser


_DEFAULTS = {
    "seed": None,
    "workers": 1,
    "out_dir": "out",
    "config": None,
    "blocks": 5,
    "dim_cap": None,
    "max_experiments": 10000,
    "first_test": 5,
    "alpha": 0.05,
    "elites": None,
    "runs": 10,
    "top": 2,
    "vote": "runs",
    "registry": None,
    "store": None,
    "suite": None,
    "checkpoints": None,
    "max_rows": 6,
}


def _parse_config_file(path: str) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key=value")
        key, _, value = (part.strip() for part in line.partition("="))
        key = key.replace("-", "_")
        if key not in _DEFAULTS:
            raise ConfigurationError(f"{path}:{lineno}: unknown setting {key!r}")
        try:
            values[key] = json.loads(value)
        except json.JSONDecodeError:
            values[key] = value
    return values


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from --config, then built-in defaults, then env seed."""
    overrides = {}
    if getattr(args, "config", _UNSET) is not _UNSET and args.config is not None:
        overrides = _parse_config_file(args.config)
    for key, value in vars(args).items():
        if value is _UNSET:
            if key in overrides:
                setattr(args, key, overrides[key])
            else:
                setattr(args, key, _DEFAULTS.get(key))
    if args.seed is None:
        env = os.environ.get(SEED_ENV_VAR)
        args.seed = int(env) if env else 0
    return args


def _out(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _checkpoints(args):
    if args.checkpoints is None:
        return DEFAULT_CHECKPOINTS
    if isinstance(args.checkpoints, str):
        return tuple(float(v) for v in args.checkpoints.split(","))
    return tuple(float(v) for v in args.checkpoints)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_suite(args) -> int:
    if args.suite_command == "list":
        for name in all_suite_names():
            spec = suite_spec(name)
            bounded = f"box {spec.box}" if spec.box else "unbounded"
            print(
                f"{name:14} dim [{spec.dim_range[0]}, {spec.dim_range[1]}]"
                f"  budget [{spec.budget_range[0]}, {spec.budget_range[1]}]"
                f"  workers {spec.num_workers}  {bounded}"
            )
        return 0
    spec = suite_spec(args.name, dim_cap=args.dim_cap)
    blocks = order_blocks(generate_suite(spec, args.blocks, args.seed))
    for b, block in enumerate(blocks):
        for inst in block.instances:
            print(
                f"block {b}  {inst.function_id:18} d={inst.dimension:<5} "
                f"budget={inst.budget:<7} workers={inst.num_workers:<4} "
                f"bounded={inst.fully_bounded}"
            )
    return 0


def _cmd_tune(args) -> int:
    out = _out(args)
    spec = suite_spec(args.suite, dim_cap=args.dim_cap)
    settings = TunerSettings(
        max_experiments=args.max_experiments,
        first_test_after_blocks=args.first_test,
        alpha=args.alpha,
        seed=args.seed,
    )
    result = tune(default_cma_space(), spec, settings)
    elites_path = out / "elites" / f"{args.suite}.jsonl"
    racelog_path = out / "elites" / f"{args.suite}.race.jsonl"
    store.save_tune_result(elites_path, racelog_path, result, args.suite, settings)
    print(f"experiments used: {result.state.experiments_used}/{settings.max_experiments}")
    for rank, elite in enumerate(result.elites, start=1):
        print(f"elite {rank}: {elite.params}  mean loss {elite.mean_loss:.6g}")
    print(f"wrote {elites_path}")
    return 0


def _cmd_validate(args) -> int:
    out = _out(args)
    spec = suite_spec(args.suite, dim_cap=args.dim_cap)
    elites_path = Path(args.elites) if args.elites else out / "elites" / f"{args.suite}.jsonl"
    elites = store.load_elites(elites_path)
    contenders = {"default": DEFAULT_CONFIG}
    for entry in elites[: args.top]:
        contenders[f"tuned-{entry['rank']}"] = CmaConfig.from_params(entry["params"])
    report = validate(
        contenders,
        spec,
        n_runs=args.runs,
        seed=args.seed,
        n_blocks=args.blocks,
        vote=args.vote,
    )
    print(f"winner: {report.overall_winner}  (runs won: "
          f"{report.per_run_winners.count(report.overall_winner)}/{len(report.per_run_winners)})")
    report_path = out / "reports" / f"{args.suite}.validation.jsonl"
    store.save_validation_report(report_path, report, args.suite)

    registry = ConfigRegistry()
    slot = SUITE_TO_CONFIG.get(args.suite)
    if slot is None:
        print(f"note: {args.suite} has no registry slot; registry keeps built-in values")
    elif report.overall_winner != "default":
        winner_cfg = contenders[report.overall_winner]
        registry = registry.replace(slot, winner_cfg)
    registry_path = out / "registries" / f"{args.suite}.txt"
    registry_path.parent.mkdir(parents=True, exist_ok=True)
    save_registry(registry_path, registry)
    print(f"wrote {registry_path}")
    return 0


def _cmd_run(args) -> int:
    out = _out(args)
    spec = suite_spec(args.suite, dim_cap=args.dim_cap)
    registry = load_registry(args.registry) if args.registry else ConfigRegistry()
    blocks = order_blocks(generate_suite(spec, args.blocks, args.seed))
    run_store = store.RunStore(out / "runs" / "records.jsonl")

    jobs = []
    for block in blocks:
        for i, inst in enumerate(block.instances):
            jobs.append((inst, derive_seed(args.seed, args.suite, inst.key())))

    def execute(job):
        inst, seed = job
        if args.algo == "wizard":
            return wizard_run(descriptor_for(inst), inst, registry, seed)
        if args.algo == "default":
            return run(DEFAULT_CONFIG, inst, seed, algorithm="default")
        if args.algo in CONFIG_NAMES:
            return run(registry.get(args.algo), inst, seed, algorithm=args.algo,
                       config_name=args.algo)
        return run_baseline(args.algo, inst, seed)

    pending = [
        job
        for job in jobs
        if (args.algo, args.suite, job[0].key(), job[1]) not in run_store
    ]
    records = parallel_map(execute, pending, workers=args.workers)
    added = sum(run_store.add(args.suite, rec) for rec in records)
    print(f"{args.algo} on {args.suite}: {added} new records, "
          f"{len(jobs) - len(pending)} already present")
    return 0


def _load_records(args, out: Path):
    path = Path(args.store) if args.store else out / "runs" / "records.jsonl"
    run_store = store.RunStore(path)
    records = list(run_store.records(suite=args.suite))
    if not records:
        raise ConfigurationError(f"no records in {path}" + (f" for suite {args.suite}" if args.suite else ""))
    return records


def _cmd_compare(args) -> int:
    out = _out(args)
    records = _load_records(args, out)
    checkpoints = _checkpoints(args)
    matrix = score_matrix(records, checkpoints)
    curves = convergence_curves(records, checkpoints)
    store.save_score_matrix(out / "reports" / "score_matrix.tsv", matrix)
    store.save_curves(out / "reports" / "curves.tsv", curves)
    for algo in matrix.algorithms:
        print(f"{format_rank_label(matrix, algo)}  {algo}")
    print(f"wrote {out / 'reports' / 'score_matrix.tsv'}")
    return 0


def _cmd_report(args) -> int:
    out = _out(args)
    records = _load_records(args, out)
    checkpoints = _checkpoints(args)
    matrix = score_matrix(records, checkpoints)
    curves = convergence_curves(records, checkpoints)
    rep_dir = out / "reports"
    rep_dir.mkdir(parents=True, exist_ok=True)
    store.save_score_matrix(rep_dir / "score_matrix.tsv", matrix)
    store.save_curves(rep_dir / "curves.tsv", curves)
    (rep_dir / "score_matrix.txt").write_text(reports.matrix_table(matrix, args.max_rows))
    (rep_dir / "curves.txt").write_text(reports.curves_table(curves))
    (rep_dir / "labels.txt").write_text(reports.labels_block(matrix))
    reports.render_heatmap(matrix, rep_dir / "heatmap.png", args.max_rows)
    reports.render_curves(curves, rep_dir / "convergence.png")
    print(reports.matrix_table(matrix, args.max_rows))
    print(f"wrote report files under {rep_dir}")
    return 0


_HANDLERS = {
    "suite": _cmd_suite,
    "tune": _cmd_tune,
    "validate": _cmd_validate,
    "run": _cmd_run,
    "compare": _cmd_compare,
    "report": _cmd_report,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors
        return int(exc.code or 0)
    try:
        args = _resolve(args)
        return _HANDLERS[args.command](args)
    except CmaWizardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))
