"""Command line: export one corpus directory with the deterministic backends.

Real model backends are wired in programmatically via run_export; the CLI
covers the offline/stand-in path.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .backends import (
    SeededProjectionImageBackend,
    StatsCaptionBackend,
    VarianceAttentionBackend,
)
from .export import ExportError, run_export


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="kira-bridge")
    parser.add_argument("corpus_dir", type=Path, help="built corpus directory")
    parser.add_argument("out_dir", type=Path, help="export target directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--prompt", default="describe this image region", help="caption prompt"
    )
    args = parser.parse_args(argv)
    try:
        manifest = run_export(
            args.corpus_dir,
            args.out_dir,
            SeededProjectionImageBackend(seed=args.seed),
            StatsCaptionBackend(),
            VarianceAttentionBackend(),
            prompt=args.prompt,
        )
    except (ExportError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"exported {len(manifest.checksums)} files to {args.out_dir}")
    bad = manifest.verify(args.out_dir)
    if bad:
        print(f"error: checksum mismatch on {bad}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
