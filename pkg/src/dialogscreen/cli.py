"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import PipelineConfig, load_config
from .errors import BackendError, DataError, StageError

log = logging.getLogger("dialogscreen")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BACKEND = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p, backends=("lexicon", "http")):
    p.add_argument("--config", type=Path, help="YAML pipeline configuration")
    p.add_argument("--out", type=Path, help="run directory (overrides the config)")
    p.add_argument("--seed", type=int)
    p.add_argument("--scenario", type=int, choices=(1, 2))
    p.add_argument("--backend", choices=backends)
    p.add_argument("-v", "--verbose", action="store_true")


def _inputs(p):
    p.add_argument("--corpus", type=Path)
    p.add_argument("--labels", type=Path)
    p.add_argument("--min-human", type=int)
    p.add_argument("--decimate", metavar="KEEP/OF", help="keep KEEP of every OF sessions per user")
    p.add_argument("--coldstart-fraction", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dialogscreen", description="Anxiety and depression screening from conversation logs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    p.add_argument("--users", type=int, default=32)
    p.add_argument("--sessions", type=int, default=68, help="mean sessions per user")
    p.add_argument("--signal", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("ingest", help="filter, label, decimate and split a corpus")
    _common(p)
    _inputs(p)

    for name, text in (("extract", "score every session"), ("window", "build the windowed feature matrix"),
                       ("select", "select features on the cold-start split"),
                       ("train", "grid-search and train NB, DT and RF"),
                       ("evaluate", "write held-out reports")):
        _common(sub.add_parser(name, help=text))

    p = sub.add_parser("run", help="run the full pipeline")
    _common(p)
    _inputs(p)

    p = sub.add_parser("predict", help="classify one session from its user's history")
    _common(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--session-id", required=True)

    p = sub.add_parser("explain", help="render caregiver dashboards")
    _common(p, backends=("lexicon-stub", "http"))
    p.add_argument("--user", action="append", dest="users")
    p.add_argument("--run", type=Path, help="run directory holding the trained models")
    return parser


def _config(args) -> PipelineConfig:
    overrides = {
        "output": args.out,
        "seed": args.seed,
        "scenario": args.scenario,
        "corpus": getattr(args, "corpus", None),
        "labels": getattr(args, "labels", None),
        "min_human": getattr(args, "min_human", None),
        "decimate": getattr(args, "decimate", None),
        "coldstart_fraction": getattr(args, "coldstart_fraction", None),
    }
    if args.command != "explain":
        overrides["backend"] = args.backend
    if args.config:
        return load_config(args.config).with_overrides(**overrides)
    if args.out is None:
        raise UsageError("either --config or --out is required")
    return PipelineConfig(**{k: v for k, v in overrides.items() if v is not None})


def _synth(args) -> None:
    from .synth import CohortConfig, generate

    cohort = generate(CohortConfig(n_users=args.users, sessions_mean=args.sessions, signal_strength=args.signal,
                                   seed=args.seed, sessions_spread=min(12, max(0, args.sessions - 1))))
    for name, path in cohort.write(args.out).items():
        print(f"{name}: {path}")


def _stage(args) -> None:
    from .pipeline import Run, run_stage

    config = _config(args)
    if args.command == "ingest":
        config.check_paths()
    run_stage(Run(config), args.command, {})
    print(f"{args.command}: done ({config.output})")


def _run(args) -> None:
    from .pipeline import run_pipeline

    config = _config(args)
    manifest = run_pipeline(config)
    print(f"run complete: {config.output} (config hash {manifest['config_hash'][:12]})")
    print((Path(config.output) / "reports" / "table.csv").read_text(encoding="utf-8"), end="")


def _predict(args) -> None:
    from .extraction import LexiconBackend
    from .extraction.backends import extract
    from .ingestion import read_corpus
    from .pipeline import predict_session, scoring_backend

    backend = scoring_backend(_config(args)) if args.backend == "http" else LexiconBackend()
    sessions = read_corpus(args.corpus).by_user()
    for user_sessions in sessions.values():
        ids = [s.session_id for s in user_sessions]
        if args.session_id in ids:
            k = ids.index(args.session_id)
            history = [extract(backend, s) for s in user_sessions[max(0, k - 29):k]]
            category, confidence = predict_session(args.model, user_sessions[k], history, backend)
            print(f"{args.session_id}\t{category.value}\t{confidence:.4f}")
            return
    raise DataError(f"session {args.session_id!r} not found in {args.corpus}")


def _explain(args) -> None:
    from .pipeline import Run, explanation_backend

    if args.config is None and args.run is None:
        raise UsageError("explain needs --config or --run")
    if args.config:
        config = load_config(args.config).with_overrides(output=args.run, seed=args.seed)
    else:
        config = PipelineConfig(output=args.run)
    if args.backend:
        config = config.with_overrides(explain_backend=args.backend)
    for path in Run(config).explain(args.users, explanation_backend(config), args.out):
        print(path)


COMMANDS = {"synth": _synth, "run": _run, "predict": _predict, "explain": _explain}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS.get(args.command, _stage)(args)
    except UsageError as exc:
        print(f"dialogscreen: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"dialogscreen: error: {exc}", file=sys.stderr)
        return EXIT_BACKEND if isinstance(exc.cause, BackendError) else EXIT_DATA
    except BackendError as exc:
        print(f"dialogscreen: backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (DataError, OSError) as exc:
        print(f"dialogscreen: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
