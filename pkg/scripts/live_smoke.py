"""Live smoke run: seed a store from GSM8K train, then compare static and
retrieval prompting on the first test items against a real endpoint.

Needs OPENAI_API_KEY (or the variable named in --config).

    python3 scripts/live_smoke.py --data gsm8k_test.jsonl --train gsm8k_train.jsonl --out runs/live
"""

import argparse
import json
import logging
from dataclasses import replace
from pathlib import Path

from raspref.backends import make_backend
from raspref.config import load_config
from raspref.harness import evaluate, load_dataset, seed_store, select, write_json
from raspref.store import TrajectoryStore


def run(data, train, out_dir, n_items=30, n_train=200, config=None, workers=4):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = load_config(config)
    backend = make_backend(replace(cfg.backend, kind="live"))
    store = TrajectoryStore.open(out / "store.jsonl")
    if len(store) == 0:
        seed_store(train, store, backend, n_train, cfg=cfg.refine)
    problems = select(load_dataset(data), n_items)
    summary = {}
    for setting in ("static", "retrieval"):
        result = evaluate(problems, store, backend, cfg.refine, setting, workers=workers, run_dir=out / setting)
        write_json(result, out / f"{setting}.json")
        summary[setting] = result.accuracy
        logging.info("%s: %d/%d correct", setting, result.correct, result.n)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary


def main():
    parser = argparse.ArgumentParser(description="live static vs retrieval smoke run")
    parser.add_argument("--data", required=True)
    parser.add_argument("--train", required=True)
    parser.add_argument("--out", default="runs/live")
    parser.add_argument("--n", type=int, default=30)
    parser.add_argument("--n-train", type=int, default=200)
    parser.add_argument("--config")
    parser.add_argument("--workers", type=int, default=4)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    print(json.dumps(run(args.data, args.train, args.out, args.n, args.n_train, args.config, args.workers)))


if __name__ == "__main__":
    main()
