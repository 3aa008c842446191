"""Command-line front end.

One subcommand per pipeline stage plus ``run-all``, ``analyze`` and
``serve``. Every stage command shares the same configuration surface: start
from ``--config`` (a JSON file with RunConfig fields) when given, then apply
any explicit flags on top. Exit codes: 0 success, 2 configuration problems,
3 backend/transport failures, 4 parse/storage failures, 1 anything else.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import StudentSimError
from .pipeline import STAGE_ORDER, Pipeline, RunConfig, analyze_run, load_run_config

# (flag dest, RunConfig field) pairs applied on top of --config / defaults.
_CONFIG_FLAGS = [
    ("seed", "seed"),
    ("n_profiles", "n_profiles"),
    ("catalog", "catalog_path"),
    ("max_item_gap", "max_item_gap"),
    ("backend", "backend"),
    ("base_url", "base_url"),
    ("api_key", "api_key"),
    ("model", "model"),
    ("embedding_model", "embedding_model"),
    ("embedding_dim", "embedding_dim"),
    ("temperature", "temperature"),
    ("timeout", "timeout"),
    ("retries", "retries"),
    ("parallelism", "parallelism"),
    ("reasks", "reasks"),
    ("profile_repetitions", "profile_repetitions"),
    ("behavior_repetitions", "behavior_repetitions"),
    ("n_turns", "n_turns"),
    ("theta", "theta"),
    ("alpha", "alpha"),
    ("max_iterations", "max_iterations"),
    ("tol", "tol"),
    ("tau", "tau"),
    ("rule", "candidate_rule"),
    ("k", "metric_ks"),
    ("relevance_threshold", "relevance_threshold"),
    ("gold", "gold_path"),
    ("stub_high_count", "stub_high_count"),
]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", required=True, help="run directory for artifacts")
    parser.add_argument("--config", help="JSON file with run-config fields")
    parser.add_argument("--no-resume", action="store_true", help="re-run even if outputs are fresh")
    g = parser.add_argument_group("run config overrides")
    g.add_argument("--seed", type=int)
    g.add_argument("--n-profiles", type=int)
    g.add_argument("--catalog", help="attribute catalog JSON path")
    g.add_argument("--max-item-gap", type=int)
    g.add_argument("--backend", choices=["stub", "http"])
    g.add_argument("--base-url")
    g.add_argument("--api-key")
    g.add_argument("--model")
    g.add_argument("--embedding-model")
    g.add_argument("--embedding-dim", type=int)
    g.add_argument("--temperature", type=float)
    g.add_argument("--timeout", type=float)
    g.add_argument("--retries", type=int)
    g.add_argument("--parallelism", type=int)
    g.add_argument("--reasks", type=int)
    g.add_argument("--profile-repetitions", type=int)
    g.add_argument("--behavior-repetitions", type=int)
    g.add_argument("--n-turns", type=int)
    g.add_argument("--theta", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--max-iterations", type=int)
    g.add_argument("--tol", type=float)
    g.add_argument("--tau", type=float)
    g.add_argument("--rule", choices=["both", "either", "average"])
    g.add_argument("--k", type=int, action="append", help="metric cutoff K (repeatable)")
    g.add_argument("--relevance-threshold", type=float)
    g.add_argument("--gold", help="expert means JSON (plain or annotation export)")
    g.add_argument("--stub-high-count", type=int)


def _build_config(args: argparse.Namespace) -> RunConfig:
    if args.config:
        config = load_run_config(args.config, out_dir=args.out)
    else:
        config = RunConfig(out_dir=args.out)
    for dest, field in _CONFIG_FLAGS:
        value = getattr(args, dest, None)
        if value is not None:
            setattr(config, field, value)
    config.validate()
    return config


def _run_stages(args: argparse.Namespace, stages: list[str]) -> int:
    config = _build_config(args)
    result = Pipeline(config).run(stages=stages, resume=not args.no_resume)
    for stage in stages:
        if stage in result.executed:
            counts = result.metadata["stages"][stage]["counts"]
            details = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()) if not isinstance(v, dict))
            print(f"{stage}: executed" + (f" ({details})" if details else ""))
        elif stage in result.skipped:
            print(f"{stage}: skipped (outputs are fresh)")
    print(f"artifacts: {result.out_dir}")
    if "report" in stages:
        report_text = result.out_dir / Pipeline.FILES["report_text"]
        if report_text.exists():
            print()
            print(report_text.read_text(encoding="utf-8"), end="")
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    summary = analyze_run(
        args.out,
        phase=args.phase,
        seed=args.analysis_seed,
        n_trees=args.trees,
    )
    for kind, info in summary["kinds"].items():
        top = info["top_features"][0]
        print(
            f"{kind}: top feature {top['feature']} (relative importance 1.0), "
            f"test MSE {info['forest']['test_mse']:.4f}"
        )
    print(f"artifacts: {Path(args.out) / 'analysis'}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import build_app

    app = build_app(
        run_dir=args.out,
        token=args.token,
        min_turns=args.min_turns,
        backend_name=args.backend or "stub",
        base_url=args.base_url,
        api_key=args.api_key,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="studentsim",
        description="Generate, vet and select simulated-student agents.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    stage_help = {
        "generate": "sample the student profile population",
        "score": "run both scoring rounds against the language-model backend",
        "graph": "embed profiles and build the similarity graph",
        "propagate": "smooth scores over the graph (both kinds)",
        "filter": "select candidates whose propagated scores clear tau",
        "rank": "rank candidates under every score source",
        "report": "evaluate rankings against the gold standard",
    }
    for stage in STAGE_ORDER:
        p = sub.add_parser(stage, help=stage_help[stage])
        _add_config_flags(p)
        p.set_defaults(func=lambda a, s=stage: _run_stages(a, [s]))

    p = sub.add_parser("run-all", help="run every stage in order (resumable)")
    _add_config_flags(p)
    p.set_defaults(func=lambda a: _run_stages(a, list(STAGE_ORDER)))

    p = sub.add_parser("analyze", help="attribute importance and distribution shift for a finished run")
    p.add_argument("--out", required=True, help="run directory to analyze")
    p.add_argument("--phase", choices=["initial", "propagated"], default="propagated")
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--analysis-seed", type=int, default=0)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("serve", help="start the expert annotation REST service over a finished run")
    p.add_argument("--out", required=True, help="run directory to serve")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--token", required=True, help="shared bearer token annotators must present")
    p.add_argument("--min-turns", type=int, default=15)
    p.add_argument("--backend", choices=["stub", "http"])
    p.add_argument("--base-url")
    p.add_argument("--api-key")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StudentSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
