"""Command-line front end for the full experimental pipeline.

Subcommands: synth, extract, evaluate, fuse, report.  Every command is
deterministic under a fixed seed/config (reruns produce byte-identical
outputs).  Options may come from a ``--config`` file of ``key=value`` lines;
explicit flags override the file.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

import argparse
import os
import sys
import traceback

import numpy as np

from . import __version__
from .classify import TrainConfig
from .evaluation import cmc_curve, cmc_to_csv, compute_eer, det_curve, det_to_csv, rank_k_rate
from .featio import FeatureFileError, load_features, save_features
from .fusion import fuse_features, fuse_scores, train_late_fusion
from .hog import extract_hog
from .imaging import (
    EQUALIZED_PARTS,
    BodyPart,
    crop,
    equalize_histogram,
    read_boxes,
    read_pgm,
    resize_bilinear,
)
from .lbp import extract_lbp
from .matching import (
    PROTOCOLS,
    ScoreSet,
    run_verification,
    scores_from_csv,
    scores_to_csv,
)
from .records import SampleRecord
from .synthdata import SynthConfig, generate, read_manifest, write_dataset

FEATURE_SIZE = (100, 150)  # (width, height) fed to the extractors

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

METRICS_FIELDS = (
    "part",
    "algorithm",
    "protocol",
    "eer",
    "eer_threshold",
    "rank1",
    "genuine",
    "impostor",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_parts(text):
    return tuple(BodyPart.from_string(p) for p in text.split(",") if p.strip())


def _parse_named(pairs):
    """NAME=PATH arguments -> ordered list of (name, path)."""
    out = []
    for pair in pairs:
        if "=" not in pair:
            raise UsageError(f"expected NAME=PATH, got {pair!r}")
        name, path = pair.split("=", 1)
        if not name or not path:
            raise UsageError(f"expected NAME=PATH, got {pair!r}")
        if name in (n for n, _ in out):
            raise UsageError(f"duplicate feature name {name!r}")
        out.append((name, path))
    return out


# ----------------------------------------------------------------------
# synth


def cmd_synth(args):
    cfg = SynthConfig(
        subjects=args.subjects,
        samples_per_pose=args.samples_per_pose,
        parts=_parse_parts(args.parts),
        intra_noise=args.intra_noise,
        pose_shift=args.pose_shift,
        texture_scale=args.texture_scale,
        seed=args.seed,
        identity_signal=not args.no_identity_signal,
    )
    dataset = generate(cfg)
    manifest = write_dataset(dataset, args.out)
    per_part = {}
    for record, _ in dataset:
        per_part[record.part.value] = per_part.get(record.part.value, 0) + 1
    for part in sorted(per_part):
        print(f"synth: {per_part[part]} images for part {part}")
    print(f"synth: manifest -> {manifest}")
    return EXIT_OK


# ----------------------------------------------------------------------
# extract


def _preprocess(img, record, boxes, equalize):
    if boxes is not None:
        key = (record.sample_id, record.part)
        if key not in boxes:
            raise ValueError(f"no bounding box for sample {record.sample_id!r}")
        img = crop(img, boxes[key])
    if equalize == "always" or (equalize == "auto" and record.part in EQUALIZED_PARTS):
        img = equalize_histogram(img)
    return resize_bilinear(img, *FEATURE_SIZE)


def cmd_extract(args):
    entries = read_manifest(args.manifest)
    part = BodyPart.from_string(args.part)
    selected = [(rec, path) for rec, path in entries if rec.part is part]
    if not selected:
        raise ValueError(f"manifest has no samples for part {part.value!r}")
    selected.sort(key=lambda rp: (rp[0].subject_id, rp[0].sample_id))

    if args.algo.startswith("embedding:"):
        source_path = args.algo.split(":", 1)[1]
        available = {
            (rec.subject_id, rec.sample_id): (rec, vec)
            for rec, vec in load_features(source_path)
            if rec.part is part
        }
        records = []
        for rec, _ in selected:
            found = available.get((rec.subject_id, rec.sample_id))
            if found is None:
                raise ValueError(
                    f"embedding file {source_path!r} has no record for sample "
                    f"{rec.sample_id!r} ({part.value})"
                )
            records.append(found)
    elif args.algo in ("lbp", "hog"):
        extractor = extract_lbp if args.algo == "lbp" else extract_hog
        boxes = read_boxes(args.boxes) if args.boxes else None
        records = []
        for rec, path in selected:
            try:
                img = read_pgm(path)
            except (OSError, ValueError) as exc:
                raise ValueError(f"sample {rec.sample_id!r}: {exc}") from None
            prepared = _preprocess(img, rec, boxes, args.equalize)
            records.append((rec, extractor(prepared, source=rec, part=part)))
    else:
        raise UsageError(f"unknown algorithm {args.algo!r} (lbp, hog, embedding:<file>)")

    save_features(args.out, records)
    dim = records[0][1].dim if records else 0
    print(f"extract: {len(records)} {args.algo} features (dim {dim}) for {part.value} -> {args.out}")
    return EXIT_OK


# ----------------------------------------------------------------------
# evaluate


def _join_manifest(feature_records, manifest_entries, label):
    """Replace feature-file records with manifest records (restores pose)."""
    by_key = {rec.key: rec for rec, _ in manifest_entries}
    joined = []
    for rec, vec in feature_records:
        full = by_key.get(rec.key)
        if full is None:
            raise ValueError(
                f"{label}: sample {rec.sample_id!r} ({rec.part.value}) is not in the manifest"
            )
        joined.append((full, vec))
    return joined


def _evaluate_scoreset(name, part, protocol_name, scores, out_dir):
    eer, threshold = compute_eer(scores)
    rank1 = rank_k_rate(scores, 1)
    print(
        f"verification {part}/{name}: {scores.genuine.size} genuine / "
        f"{scores.impostor.size} impostor scores"
    )
    print(f"metrics {part}/{name}: EER {eer * 100:.2f}% R1 {rank1 * 100:.2f}%")
    tag = f"{part}_{name.replace('+', '-')}"
    with open(os.path.join(out_dir, f"det_{tag}.csv"), "w", encoding="ascii") as fh:
        fh.write(det_to_csv(det_curve(scores)))
    with open(os.path.join(out_dir, f"cmc_{tag}.csv"), "w", encoding="ascii") as fh:
        fh.write(cmc_to_csv(cmc_curve(scores)))
    with open(os.path.join(out_dir, f"scores_{tag}.csv"), "w", encoding="ascii") as fh:
        fh.write(scores_to_csv(scores))
    return {
        "part": part,
        "algorithm": name,
        "protocol": protocol_name,
        "eer": repr(eer),
        "eer_threshold": repr(threshold),
        "rank1": repr(rank1),
        "genuine": str(scores.genuine.size),
        "impostor": str(scores.impostor.size),
    }


def _metrics_table(rows, value_key, percent=True):
    parts = sorted({r["part"] for r in rows})
    algos = []
    for r in rows:
        if r["algorithm"] not in algos:
            algos.append(r["algorithm"])
    cell = {(r["part"], r["algorithm"]): float(r[value_key]) for r in rows}
    lines = ["| part | " + " | ".join(algos) + " |"]
    lines.append("|" + "---|" * (len(algos) + 1))
    for part in parts:
        row = [part]
        for algo in algos:
            value = cell.get((part, algo))
            if value is None:
                row.append("n/a")
            else:
                row.append(f"{value * 100:.2f}" if percent else f"{value:.4f}")
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines)


def cmd_evaluate(args):
    entries = read_manifest(args.manifest)
    named = _parse_named(args.features)
    if not named:
        raise UsageError("at least one --features NAME=PATH is required")
    os.makedirs(args.out, exist_ok=True)
    protocol = PROTOCOLS[args.protocol](split_seed=args.split_seed)

    score_sets = {}  # (part, name) -> ScoreSet
    rows = []
    for name, path in named:
        records = load_features(path)
        parts = sorted({rec.part for rec, _ in records}, key=lambda p: p.value)
        for part in parts:
            subset = [(rec, vec) for rec, vec in records if rec.part is part]
            dataset = _join_manifest(subset, entries, name)
            scores = run_verification(dataset, protocol)
            score_sets[(part.value, name)] = scores
            rows.append(_evaluate_scoreset(name, part.value, protocol.name, scores, args.out))

    for spec in args.sum_fuse or []:
        names = spec.split("+")
        if len(names) < 2:
            raise UsageError(f"--sum-fuse needs at least two names, got {spec!r}")
        parts = sorted({part for part, name in score_sets if name in names})
        fused_any = False
        for part in parts:
            try:
                components = [score_sets[(part, name)] for name in names]
            except KeyError:
                continue
            fused = fuse_scores(components)
            score_sets[(part, spec)] = fused
            rows.append(_evaluate_scoreset(spec, part, protocol.name, fused, args.out))
            fused_any = True
        if not fused_any:
            raise ValueError(f"--sum-fuse {spec!r}: no part has scores for all of {names}")

    rows.sort(key=lambda r: (r["part"], r["algorithm"]))
    metrics_path = os.path.join(args.out, "metrics.csv")
    with open(metrics_path, "w", encoding="ascii") as fh:
        fh.write(",".join(METRICS_FIELDS) + "\n")
        for row in rows:
            fh.write(",".join(row[f] for f in METRICS_FIELDS) + "\n")

    report = [
        f"# Evaluation report ({protocol.name} protocol)",
        "",
        "## Verification EER (%)",
        "",
        _metrics_table(rows, "eer"),
        "",
        "## Identification rank-1 rate (%)",
        "",
        _metrics_table(rows, "rank1"),
        "",
    ]
    report_text = "\n".join(report)
    with open(os.path.join(args.out, "report.md"), "w", encoding="ascii") as fh:
        fh.write(report_text)
    print(report_text)
    print(f"evaluate: metrics -> {metrics_path}")
    return EXIT_OK


# ----------------------------------------------------------------------
# fuse


def _load_branch(path, label):
    records = load_features(path)
    if not records:
        raise ValueError(f"{label}: feature file {path!r} is empty")
    return {(rec.subject_id, rec.sample_id): (rec, vec) for rec, vec in records}


def cmd_fuse(args):
    if args.level == "feature":
        named = _parse_named(args.features)
        if len(named) < 2:
            raise UsageError("feature fusion needs at least two --features NAME=PATH")
        branches = [_load_branch(path, name) for name, path in named]
        keys = sorted(branches[0])
        fused_records = []
        for key in keys:
            vecs = []
            for (name, _), branch in zip(named, branches):
                if key not in branch:
                    raise ValueError(f"{name}: no record for sample {key[1]!r}")
                vecs.append(branch[key][1])
            base = branches[0][key][0]
            fused = fuse_features(vecs)
            out_rec = SampleRecord(
                subject_id=base.subject_id, sample_id=base.sample_id, part=base.part
            )
            fused_records.append((out_rec, fused))
        save_features(args.out, fused_records)
        dim = fused_records[0][1].dim
        print(f"fuse: {len(fused_records)} fused features (dim {dim}) -> {args.out}")
        return EXIT_OK

    if args.level == "score":
        if len(args.scores) < 2:
            raise UsageError("score fusion needs at least two --scores CSV files")
        sets = []
        for path in args.scores:
            with open(path, "r", encoding="ascii") as fh:
                sets.append(scores_from_csv(fh.read()))
        fused = fuse_scores(sets)
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(scores_to_csv(fused))
        eer, _ = compute_eer(fused)
        print(f"fuse: sum of {len(sets)} score sets -> {args.out} (EER {eer * 100:.2f}%)")
        return EXIT_OK

    # late-fusion head
    named = _parse_named(args.features)
    if len(named) != 2:
        raise UsageError("late-head fusion takes exactly two --features NAME=PATH")
    entries = read_manifest(args.manifest)
    by_key = {rec.key: rec for rec, _ in entries}
    protocol = PROTOCOLS[args.protocol](split_seed=args.split_seed)

    (name_a, path_a), (name_b, path_b) = named
    branch_a = _load_branch(path_a, name_a)
    branch_b = _load_branch(path_b, name_b)
    shared = sorted(set(branch_a) & set(branch_b))
    if not shared:
        raise ValueError("branches share no (subject, sample) pairs")

    # Pose-aware split driven by branch A's manifest records.
    paired = []
    for key in shared:
        rec_a = branch_a[key][0]
        manifest_rec = by_key.get(rec_a.key)
        if manifest_rec is None:
            raise ValueError(f"sample {key[1]!r} is not in the manifest")
        paired.append((manifest_rec, key))
    from .matching import split_gallery_probe

    pseudo = [(rec, branch_a[key][1]) for rec, key in paired]
    gallery, probes = split_gallery_probe(pseudo, protocol)
    subject_ids = sorted(gallery)
    index_of = {s: i for i, s in enumerate(subject_ids)}

    def pair_for(rec):
        key = (rec.subject_id, rec.sample_id)
        return branch_a[key][1], branch_b[key][1]

    train_a, train_b, labels = [], [], []
    for subject in subject_ids:
        for rec, _ in gallery[subject]:
            va, vb = pair_for(rec)
            train_a.append(va)
            train_b.append(vb)
            labels.append(index_of[subject])
    cfg = TrainConfig(
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        seed=args.seed,
    )
    model = train_late_fusion(
        train_a, train_b, labels, cfg,
        hidden_width=args.hidden_width, class_labels=subject_ids,
    )

    probe_a = [pair_for(rec)[0] for rec, _ in probes]
    probe_b = [pair_for(rec)[1] for rec, _ in probes]
    matrix = model.predict_proba(
        np.vstack([v.values for v in probe_a]), np.vstack([v.values for v in probe_b])
    )
    true_index = np.array([index_of[rec.subject_id] for rec, _ in probes], dtype=np.int64)
    scores = ScoreSet.from_matrix(
        matrix, true_index, tuple(rec.sample_id for rec, _ in probes), tuple(subject_ids)
    )
    os.makedirs(args.out, exist_ok=True)
    row = _evaluate_scoreset(f"latehead-{name_a}-{name_b}", "multimodal", protocol.name, scores, args.out)
    with open(os.path.join(args.out, "metrics.csv"), "w", encoding="ascii") as fh:
        fh.write(",".join(METRICS_FIELDS) + "\n")
        fh.write(",".join(row[f] for f in METRICS_FIELDS) + "\n")
    return EXIT_OK


# ----------------------------------------------------------------------
# report


def cmd_report(args):
    rows = []
    for path in args.metrics:
        with open(path, "r", encoding="ascii") as fh:
            lines = [line.strip() for line in fh if line.strip()]
        if not lines or lines[0] != ",".join(METRICS_FIELDS):
            raise ValueError(f"{path}: not a metrics.csv file")
        for line in lines[1:]:
            values = line.split(",")
            rows.append(dict(zip(METRICS_FIELDS, values)))
    if not rows:
        raise ValueError("no metric rows found")
    rows.sort(key=lambda r: (r["part"], r["algorithm"]))
    text = "\n".join(
        [
            "# Combined report",
            "",
            "## Verification EER (%)",
            "",
            _metrics_table(rows, "eer"),
            "",
            "## Identification rank-1 rate (%)",
            "",
            _metrics_table(rows, "rank1"),
            "",
        ]
    )
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text)
    print(text)
    return EXIT_OK


# ----------------------------------------------------------------------
# parser plumbing


def build_parser():
    parser = _Parser(prog="mmwtex", description=__doc__)
    parser.add_argument("--version", action="version", version=f"mmwtex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    p = sub.add_parser("synth", parents=[], help="generate a synthetic dataset")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--subjects", type=int, default=50)
    p.add_argument("--samples-per-pose", type=int, default=2)
    p.add_argument("--parts", default="torso", help="comma-separated body parts")
    p.add_argument("--intra-noise", type=float, default=4.0)
    p.add_argument("--pose-shift", type=int, default=8)
    p.add_argument("--texture-scale", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-identity-signal", action="store_true")
    p.set_defaults(func=cmd_synth)
    subparsers["synth"] = p

    p = sub.add_parser("extract", help="extract features into an MMWFEAT file")
    p.add_argument("--config", default=None)
    p.add_argument("--manifest", required=True)
    p.add_argument("--part", required=True)
    p.add_argument("--algo", required=True, help="lbp | hog | embedding:<file>")
    p.add_argument("--out", required=True)
    p.add_argument("--boxes", default=None, help="bounding-box sidecar file")
    p.add_argument("--equalize", choices=("auto", "always", "never"), default="auto")
    p.set_defaults(func=cmd_extract)
    subparsers["extract"] = p

    p = sub.add_parser("evaluate", help="run a protocol and report EER / rank-1")
    p.add_argument("--config", default=None)
    p.add_argument("--manifest", required=True)
    p.add_argument("--features", nargs="+", required=True, metavar="NAME=PATH")
    p.add_argument("--protocol", choices=sorted(PROTOCOLS), default="frontal")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--sum-fuse", action="append", metavar="NAME+NAME")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)
    subparsers["evaluate"] = p

    p = sub.add_parser("fuse", help="feature / score / late-head fusion")
    p.add_argument("--config", default=None)
    p.add_argument("--level", choices=("feature", "score", "latehead"), required=True)
    p.add_argument("--features", nargs="*", default=[], metavar="NAME=PATH")
    p.add_argument("--scores", nargs="*", default=[], metavar="CSV")
    p.add_argument("--manifest", default=None)
    p.add_argument("--protocol", choices=sorted(PROTOCOLS), default="frontal")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=50)
    p.add_argument("--learning-rate", type=float, default=1e-4)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hidden-width", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuse)
    subparsers["fuse"] = p

    p = sub.add_parser("report", help="merge metrics.csv files into one table")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("metrics", nargs="+", help="metrics.csv files from evaluate runs")
    p.set_defaults(func=cmd_report)
    subparsers["report"] = p

    return parser, subparsers


def _read_config(path):
    values = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key] = value
    return values


def _apply_config(subparser, config_path):
    values = _read_config(config_path)
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in values.items():
        dest = key.replace("-", "_")
        action = actions.get(dest)
        if action is None:
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = raw.lower() in ("1", "true", "yes")
        elif action.nargs in ("+", "*"):
            defaults[dest] = raw.split()
        elif action.type is not None:
            defaults[dest] = action.type(raw)
        else:
            defaults[dest] = raw
    subparser.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    try:
        if argv and argv[0] in subparsers and "--config" in argv:
            index = argv.index("--config")
            if index + 1 >= len(argv):
                raise UsageError("--config needs a file path")
            _apply_config(subparsers[argv[0]], argv[index + 1])
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FeatureFileError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
