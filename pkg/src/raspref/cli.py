"""Command-line entry point: ``raspref seed | eval | synth``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .backends import make_backend
from .config import RunConfig, load_config
from .errors import RasprefError
from .harness import SETTINGS, evaluate, load_dataset, seed_store, select, write_csv, write_json
from .prompts import base_prompt
from .store import TrajectoryStore
from .synthetic import make_corpus


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--backend", choices=["scripted", "live"], help="overrides the config's backend kind")
    p.add_argument("--store", default="store", help="store directory or .jsonl file (default: ./store)")
    p.add_argument("--seed", type=int, help="run seed")
    p.add_argument("--shuffle-seed", type=int, help="shuffle before taking the first n items")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="raspref", description="Retrieval-augmented prompt refinement")
    sub = parser.add_subparsers(dest="command", required=True)

    seed = sub.add_parser("seed", help="populate the trajectory store from training data")
    _common(seed)
    seed.add_argument("--train", required=True, help="training JSONL")
    seed.add_argument("--n", type=int, default=200, help="number of training items (default 200)")

    ev = sub.add_parser("eval", help="evaluate one prompting setting")
    _common(ev)
    ev.add_argument("--data", required=True, help="evaluation JSONL")
    ev.add_argument("--setting", choices=SETTINGS, default="retrieval")
    ev.add_argument("--k", type=int, help="retrieved trajectories per problem (default 5)")
    ev.add_argument("--K", dest="samples", type=int, help="samples per evaluation (default 5)")
    ev.add_argument("--rounds", type=int, help="refinement rounds for the refined setting (default 3)")
    ev.add_argument("--limit", type=int, help="evaluate only the first N items")
    ev.add_argument("--workers", type=int, default=1)
    ev.add_argument("--min-verifier-score", type=float, help="only retrieve trajectories at or above this score")
    ev.add_argument("--out", default="report.json", help="JSON report path")
    ev.add_argument("--csv", help="optional per-item CSV path")
    ev.add_argument("--run-dir", help="directory for the per-round log")

    syn = sub.add_parser("synth", help="write the synthetic desk-scale corpus")
    syn.add_argument("--out-dir", required=True)
    syn.add_argument("--n", type=int, default=50)
    syn.add_argument("--seed", type=int, default=0)
    return parser


def _resolve(args: argparse.Namespace) -> RunConfig:
    run = load_config(args.config)
    backend = replace(run.backend, kind=args.backend) if args.backend else run.backend
    overrides = {
        "seed": args.seed,
        "retrieval_k": getattr(args, "k", None),
        "samples": getattr(args, "samples", None),
        "rounds": getattr(args, "rounds", None),
        "min_verifier_score": getattr(args, "min_verifier_score", None),
    }
    refine_cfg = replace(run.refine, **{k: v for k, v in overrides.items() if v is not None})
    return RunConfig(backend=backend, refine=refine_cfg, instructions=run.instructions)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "synth":
            train, test = make_corpus(args.n, args.seed).write(args.out_dir)
            print(f"wrote {train} and {test}")
            return 0

        run = _resolve(args)
        backend = make_backend(run.backend)
        base = base_prompt(run.instructions) if run.instructions else base_prompt()
        store = TrajectoryStore.open(args.store)

        if args.command == "seed":
            before = len(store)
            seed_store(args.train, store, backend, args.n, base, run.refine, args.shuffle_seed)
            print(f"store {store.path}: {before} -> {len(store)} records")
            return 0

        problems = select(load_dataset(args.data), args.limit, args.shuffle_seed)
        result = evaluate(problems, store, backend, run.refine, args.setting, base, args.workers, args.run_dir)
        write_json(result, args.out)
        if args.csv:
            write_csv(result, args.csv)
        print(json.dumps({"setting": result.setting, "n": result.n, "correct": result.correct, "accuracy": result.accuracy}))
        return 0
    except (RasprefError, OSError) as exc:
        print(f"raspref: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
