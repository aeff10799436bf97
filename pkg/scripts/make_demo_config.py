#!/usr/bin/env python3
"""Set up a ready-to-run working directory: synthetic dataset, open-vocab
split, and a config.json wired for the CLI."""

import argparse
import json
from pathlib import Path

from ovhar.decode import save_split
from ovhar.synth import default_spec, generate, make_open_vocab_split, save_spec


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--records-per-class", type=int, default=16)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = default_spec(seed=args.seed, records_per_class=args.records_per_class)
    generate(spec, out / "data")
    save_spec(spec, out / "data" / "spec.json")
    split = make_open_vocab_split(spec, m_test=3, seed=args.seed, min_motion_coverage=2)
    save_split(split, out / "data" / "split.json")
    config = {
        "seed": args.seed,
        "manifest": "data/manifest.json",
        "lexicon": "data/lexicon.json",
        "table": "run/table.ovht",
        "checkpoint": "run/model.ovhr",
        "split": "data/split.json",
        "run_dir": "run",
        "embedder": "test",
        "candidates": "all",
        "model": {"conv_filters": 16, "hidden_size": 32},
        "train": {"max_epochs": 150, "early_stop_patience_epochs": 30},
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n")
    print(f"ready: cd {out} && ovhar embed-table --config config.json "
          f"&& ovhar train --config config.json && ovhar eval --config config.json")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
