"""Command line for the exporter.

    mmwfeat-export export --manifest M --model ID --layer NAME --out F

Exit codes: 0 success, 1 usage error, 2 data/model error (including
per-item failures, each reported on stderr).
"""

import argparse
import sys

from .export import MODELS, ExportError, ExportJob, run_export


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def build_parser():
    parser = _Parser(prog="mmwfeat-export", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="run images through a backbone, write MMWFEAT")
    p.add_argument("--manifest", required=True, help="dataset manifest.csv")
    p.add_argument("--model", required=True, help=f"backbone id: {sorted(MODELS)}")
    p.add_argument("--layer", default="fc7",
                   help="layer alias (fc6/fc7) or torchvision module path")
    p.add_argument("--out", required=True, help="output MMWFEAT file")
    p.add_argument("--weights", default=None,
                   help="local state-dict file; omitted = fixed-seed random init")
    p.add_argument("--batch-size", type=int, default=16)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help
            return 0 if exc.code in (0, None) else 1
        job = ExportJob(
            manifest=args.manifest,
            model_id=args.model,
            layer=args.layer,
            out_path=args.out,
            weights=args.weights,
            batch_size=args.batch_size,
        )
        count = run_export(job)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ExportError as exc:
        for failure in exc.failures:
            print(f"error: {failure}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"export: {count} records ({args.model}/{args.layer}) -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
