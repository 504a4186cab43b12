"""Static vs retrieval-augmented accuracy on the synthetic corpus.

    python3 scripts/desk_separation.py --out runs/desk
"""

import argparse
import json
import time
from pathlib import Path

from raspref.harness import evaluate, seed_store, write_json
from raspref.refine import RefineConfig
from raspref.store import TrajectoryStore
from raspref.synthetic import make_corpus


def run(out_dir, n=50, seed=0, run_seed=17):
    out = Path(out_dir)
    corpus = make_corpus(n, seed)
    train, _ = corpus.write(out / "data")
    store = TrajectoryStore.open(out / "store.jsonl")
    if len(store) == 0:
        seed_store(train, store, corpus.backend(), n)
    cfg = RefineConfig(seed=run_seed)
    summary = {}
    for setting in ("static", "retrieval", "refined"):
        start = time.perf_counter()
        result = evaluate(corpus.test, store, corpus.backend(), cfg, setting)
        write_json(result, out / f"{setting}.json")
        summary[setting] = {"accuracy": result.accuracy, "seconds": round(time.perf_counter() - start, 3)}
    return summary


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs/desk")
    parser.add_argument("--n", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    print(json.dumps(run(args.out, args.n, args.seed), indent=2))


if __name__ == "__main__":
    main()
