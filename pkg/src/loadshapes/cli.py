"""Command-line harness.

Verbs: ``generate`` synthetic datasets, ``run`` an experiment suite,
``score`` to re-render the rank matrix from persisted artifacts, ``export``
day-type likelihood profiles, ``archetype`` to link clusters to survey
context.  Exit codes: 0 success, 1 configuration / input error, 2 completed
with partial failures.
"""

from __future__ import annotations

import argparse
import os
import sys

from .errors import LoadShapesError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loadshapes",
        description="Cluster daily load profiles and rate the results.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    gen = sub.add_parser("generate", help="generate a synthetic dataset")
    gen.add_argument("--config", required=True, help="generator YAML")
    gen.add_argument("--out-dir", required=True)
    gen.add_argument("--seed", type=int, default=None)

    run = sub.add_parser("run", help="run an experiment suite")
    run.add_argument("--config", required=True, help="suite YAML")
    run.add_argument("--out-dir", required=True)
    run.add_argument("--seed", type=int, default=None, help="override suite seed")
    run.add_argument(
        "--top-k",
        default=None,
        help="externally evaluate only the K best cells by CI ('all' = every cell)",
    )
    run.add_argument("--threads", type=int, default=1)

    score = sub.add_parser("score", help="re-score a finished run")
    score.add_argument("--out-dir", required=True)

    export = sub.add_parser("export", help="export day-type likelihoods")
    export.add_argument("--out-dir", required=True)
    export.add_argument("--experiment", required=True)
    export.add_argument("--dest", default=None)

    arch = sub.add_parser("archetype", help="build customer archetypes")
    arch.add_argument("--config", required=True, help="archetype YAML")
    arch.add_argument("--out-dir", required=True, help="suite output directory")
    return parser


def _cmd_generate(args) -> int:
    from .synth import spec_from_yaml, synthesize
    from .data import save_profiles

    spec = spec_from_yaml(args.config)
    result = synthesize(spec, seed=args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    profiles = os.path.join(args.out_dir, "profiles.csv")
    save_profiles(result.dataset, profiles)
    truth = os.path.join(args.out_dir, "truth.csv")
    result.save_truth(truth)
    written = [profiles, truth]
    if result.survey:
        survey = os.path.join(args.out_dir, "survey.csv")
        result.save_survey(survey)
        written.append(survey)
    print(f"generated {len(result.dataset)} profiles")
    for path in written:
        print(f"  wrote {path}")
    return 0


def _cmd_run(args) -> int:
    from .suite import load_suite_config, run_suite

    suite = load_suite_config(args.config, seed=args.seed, top_k=args.top_k)
    manifest = run_suite(suite, args.out_dir, threads=args.threads)
    failed = [
        name
        for name, record in manifest["cells"].items()
        if record["status"] != "completed"
    ]
    for name, record in manifest["cells"].items():
        ci = record.get("ci")
        status = record["status"]
        note = f" ci={ci:.6f}" if ci is not None else ""
        if status != "completed":
            note = f" error: {record.get('error')}"
        print(f"{name}: {status}{note}")
    if manifest.get("winner"):
        print(f"winner: {manifest['winner']}")
    elif manifest.get("scorecard_note"):
        print(manifest["scorecard_note"])
    if failed:
        print(f"{len(failed)} cell(s) failed", file=sys.stderr)
        return 2
    return 0


def _cmd_score(args) -> int:
    from .suite import score_run

    print(score_run(args.out_dir))
    return 0


def _cmd_export(args) -> int:
    from .suite import export_daytype_likelihood

    dest = export_daytype_likelihood(args.out_dir, args.experiment, dest=args.dest)
    print(f"wrote {dest}")
    return 0


def _cmd_archetype(args) -> int:
    from .suite import run_archetypes

    report = run_archetypes(args.config, args.out_dir)
    print(
        f"model: {report['n_training_rows']} rows, "
        f"{len(report['associations'])} associations "
        f"(converged={report['converged']})"
    )
    for archetype in report["archetypes"]:
        clusters = [c["cluster"] for c in archetype["clusters"]]
        print(f"{archetype['name']}: clusters {clusters or 'none'}")
        for warning in archetype["warnings"]:
            print(f"  warning: {warning}")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "run": _cmd_run,
    "score": _cmd_score,
    "export": _cmd_export,
    "archetype": _cmd_archetype,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except LoadShapesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
