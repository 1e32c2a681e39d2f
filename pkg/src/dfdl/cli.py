"""Command-line interface: ``dfdl synth | train | classify | eval``.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .classify import (
    DEFAULT_CONNECTIVITY,
    DEFAULT_LAMBDA,
    DEFAULT_MIN_REGION,
    DEFAULT_THRESHOLD,
    ClassifierModel,
    ImageDecisionRule,
    PatchGridLabels,
    classify_image_by_vote,
    classify_patches,
    detect_regions,
    label_components,
    positive_proportion,
)
from .data import (
    DEFAULT_PATCH,
    DEFAULT_PATCHES_PER_CLASS,
    DatasetManifest,
    ManifestEntry,
    SyntheticSpec,
    downsample,
    draw_planted,
    extract_patches,
    grid_shape,
    planted_bases,
    pool_complementary,
    to_luminance,
)
from .errors import DFDLError, FormatError, InvariantError
from .model import load_model, save_model
from .netpbm import read_netpbm, write_netpbm
from .trainer import TrainConfig, train_dfdl
from .types import SampleSet

log = logging.getLogger("dfdl")

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2
_DEFAULTS = TrainConfig()


class UsageError(DFDLError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- shared helpers ----------------------------------------------------------


def load_gray(path, factor=1):
    samples, maxval = read_netpbm(path)
    img = to_luminance(samples)
    if maxval != 255:
        img = type(img)(np.clip(img.pixels * (255.0 / maxval), 0.0, 1.0))
    return downsample(img, factor) if factor != 1 else img


def _rule_from_args(args, base: ImageDecisionRule) -> ImageDecisionRule:
    return ImageDecisionRule(
        mode=args.mode or base.mode,
        threshold=base.threshold if args.threshold is None else args.threshold,
        min_region_patches=base.min_region_patches if args.min_region is None else args.min_region,
        connectivity=base.connectivity if args.connectivity is None else args.connectivity,
    )


def _add_rule_flags(p, defaults: bool):
    # train stores defaults in the model; classify/eval override only when given
    p.add_argument("--mode", choices=["proportion_vote", "region_detect"], default="proportion_vote" if defaults else None)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD if defaults else None)
    p.add_argument("--min-region", type=int, default=DEFAULT_MIN_REGION if defaults else None)
    p.add_argument("--connectivity", type=int, choices=[4, 8], default=DEFAULT_CONNECTIVITY if defaults else None)


def decide_image(img, model: ClassifierModel, rule: ImageDecisionRule, positive: int):
    """Classify one image's grid patches; returns a dict of decision statistics."""
    p = int(round(np.sqrt(model.d)))
    if p * p != model.d:
        raise UsageError(f"model dimension {model.d} is not a square patch size")
    if p > min(img.height, img.width):
        raise UsageError(f"model patch size {p} (d={model.d}) exceeds image size {img.height}x{img.width}")
    rows, cols = grid_shape(img, p)
    Y = extract_patches(img, p, mode="grid")
    zero = int(np.count_nonzero(~np.any(Y != 0.0, axis=0)))
    if zero:
        log.warning("%d of %d patches have zero energy (constant patches)", zero, Y.shape[1])
    pred, _, _ = classify_patches(Y, model)
    grid = PatchGridLabels.from_predictions(pred, rows, cols)
    _, sizes = label_components(grid.labels == positive, rule.connectivity)
    stats = {
        "patches": rows * cols,
        "rows": rows,
        "cols": cols,
        "positive_proportion": positive_proportion(grid, positive),
        "largest_region": int(sizes.max(initial=0)),
        "qualifying_regions": int(np.count_nonzero(sizes >= rule.min_region_patches)),
        "zero_patches": zero,
    }
    mask = None
    if rule.mode == "proportion_vote":
        label = classify_image_by_vote(grid, rule, positive, model.n_classes)
    else:
        label, mask = detect_regions(grid, rule, positive, model.n_classes)
    return label, stats, grid, mask


def _positive_index(model, name):
    if name is None:
        return 0
    if name not in model.class_labels:
        raise UsageError(f"unknown positive class {name!r}; model labels are {list(model.class_labels)}")
    return model.class_labels.index(name)


# --- synth -------------------------------------------------------------------


def assemble_image(tiles, patch, grid):
    """Lay `grid` x `grid` column-major patch vectors out row-major as 8-bit pixels."""
    blocks = tiles.T.reshape(grid, grid, patch, patch).transpose(0, 1, 3, 2)
    img = blocks.transpose(0, 2, 1, 3).reshape(grid * patch, grid * patch)
    peak = np.abs(img).max()
    scale = 0.45 / peak if peak > 0 else 0.0
    return np.round(255.0 * (0.5 + scale * img)).astype(np.uint8)


def cmd_synth(args):
    spec = SyntheticSpec(
        d=args.patch_size**2,
        classes=args.classes,
        atoms_per_class=args.atoms,
        sparsity=args.sparsity,
        noise_sd=args.noise,
        patches_per_class=args.grid**2,
        seed=args.seed,
    )
    out = Path(args.out)
    try:
        (out / "images").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot create {out}: {exc.strerror}") from exc
    rng = np.random.default_rng(spec.seed)
    bases = planted_bases(spec, rng)
    entries = []
    for split, count in (("train", args.train_images), ("test", args.test_images)):
        for c, basis in enumerate(bases):
            label = f"class{c + 1}"
            for i in range(count):
                tiles = draw_planted(basis, args.grid**2, spec.sparsity, spec.noise_sd, rng)
                rel = f"images/{label}_{split}_{i:03d}.pgm"
                write_netpbm(out / rel, assemble_image(tiles, args.patch_size, args.grid))
                entries.append(ManifestEntry(rel, label, split))
    DatasetManifest(entries).save(out / "manifest.tsv")
    print(out / "manifest.tsv")
    return EXIT_OK


# --- train -------------------------------------------------------------------


def collect_class_patches(manifest, base, labels, args):
    per_class = []
    for ci, label in enumerate(labels):
        entries = [e for e in manifest.split("train") if e.label == label]
        if not entries:
            raise UsageError(f"class {label!r} has no training images")
        share, extra = divmod(args.patches_per_class, len(entries))
        chunks = []
        for ii, e in enumerate(entries):
            img = load_gray(manifest.resolve(e, base), args.downsample)
            if args.sampling == "grid":
                chunks.append(extract_patches(img, args.patch_size, mode="grid"))
            else:
                n = share + (1 if ii < extra else 0)
                if n:
                    seed = np.random.SeedSequence([args.seed, ci, ii])
                    chunks.append(extract_patches(img, args.patch_size, n, "random", seed))
        Y = np.hstack(chunks)
        if args.sampling == "grid" and Y.shape[1] > args.patches_per_class:
            rng = np.random.default_rng([args.seed, ci])
            Y = Y[:, np.sort(rng.choice(Y.shape[1], args.patches_per_class, replace=False))]
        per_class.append(Y)
    return per_class


def cmd_train(args):
    manifest = DatasetManifest.load(args.manifest)
    base = Path(args.manifest).parent
    labels = manifest.labels()
    if len(labels) < 2:
        raise UsageError("training needs at least two classes in the manifest")
    config = TrainConfig(
        k=args.bases,
        L=args.sparsity,
        rho=args.rho,
        max_outer_iters=args.iters,
        objective_tol=args.tol,
        rho_shrink=args.rho_shrink,
        seed=args.seed,
        sweeps=args.sweeps,
    )
    rule = ImageDecisionRule(args.mode, args.threshold, args.min_region, args.connectivity)
    if not args.lam > 0:
        raise UsageError("--lambda must be positive")
    per_class = collect_class_patches(manifest, base, labels, args)
    rng = np.random.default_rng([args.seed, len(labels)])
    dicts, lines = [], []
    for i, label in enumerate(labels):
        samples = SampleSet(per_class[i], pool_complementary(per_class, i, rng))
        t0 = time.perf_counter()
        D, trace = train_dfdl(samples, config)
        log.info("class %s: %d iterations, final rho %.6g, %.2fs", label, len(trace.records), trace.rhos[-1], time.perf_counter() - t0)
        dicts.append(D)
        lines.extend(trace.to_lines(label=label, times=args.trace_times))
    model = ClassifierModel(tuple(dicts), args.lam, tuple(labels))
    nbytes = save_model(model, rule, args.out)
    trace_path = Path(args.trace) if args.trace else Path(args.out).with_suffix(".trace.txt")
    trace_path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    print(f"{args.out}\t{nbytes}")
    return EXIT_OK


# --- classify ----------------------------------------------------------------


def cmd_classify(args):
    model, stored = load_model(args.model)
    rule = _rule_from_args(args, stored)
    if args.mask and rule.mode != "region_detect":
        raise UsageError("--mask requires region_detect mode")
    positive = _positive_index(model, args.positive)
    img = load_gray(args.image, args.downsample)
    label, stats, grid, mask = decide_image(img, model, rule, positive)
    if args.mask:
        write_netpbm(args.mask, np.where(mask, 255, 0).astype(np.uint8))
    if args.grid_dump:
        Path(args.grid_dump).write_text(
            "".join("\t".join(model.class_labels[v] for v in row) + "\n" for row in grid.labels), encoding="utf-8"
        )
    fields = [model.class_labels[label], rule.mode] + [repr(v) if isinstance(v, float) else str(v) for v in stats.values()]
    print("\t".join(fields))
    return EXIT_OK


# --- eval --------------------------------------------------------------------


def flatten_report(report, prefix=""):
    """``key=value`` lines for every scalar leaf of the nested report."""
    lines = []
    for key, value in report.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            lines.extend(flatten_report(value, name + "."))
        else:
            lines.append(f"{name}={json.dumps(value)}")
    return lines


def cmd_eval(args):
    t_start = time.perf_counter()
    model, stored = load_model(args.model)
    rule = _rule_from_args(args, stored)
    positive = _positive_index(model, args.positive)
    manifest = DatasetManifest.load(args.manifest)
    base = Path(args.manifest).parent
    tests = manifest.split("test")
    if not tests:
        raise UsageError("manifest has no test images")
    labels = list(model.class_labels)
    unknown = sorted({e.label for e in tests} - set(labels))
    if unknown:
        raise UsageError(f"test labels {unknown} are not in the model")
    c = len(labels)
    confusion = np.zeros((c, c), dtype=np.int64)
    patch_total = np.zeros(c, dtype=np.int64)
    patch_correct = np.zeros(c, dtype=np.int64)
    images = []
    t_images = time.perf_counter()
    for e in tests:
        img = load_gray(manifest.resolve(e, base), args.downsample)
        pred, stats, grid, _ = decide_image(img, model, rule, positive)
        truth = labels.index(e.label)
        confusion[truth, pred] += 1
        patch_total[truth] += grid.labels.size
        patch_correct[truth] += int(np.count_nonzero(grid.labels == truth))
        images.append({"path": e.path, "label": e.label, "predicted": labels[pred], **stats})
    elapsed_images = time.perf_counter() - t_images
    counts = confusion.sum(axis=1)
    report = {
        "labels": labels,
        "images": int(counts.sum()),
        "accuracy": float(np.trace(confusion) / counts.sum()),
        "per_class_accuracy": {
            lab: (float(confusion[i, i] / counts[i]) if counts[i] else None) for i, lab in enumerate(labels)
        },
        "confusion": {lab: {labels[j]: int(confusion[i, j]) for j in range(c)} for i, lab in enumerate(labels)},
        "test_counts": {lab: int(counts[i]) for i, lab in enumerate(labels)},
        "patch_counts": {lab: int(patch_total[i]) for i, lab in enumerate(labels)},
        "patch_accuracy": {
            lab: (float(patch_correct[i] / patch_total[i]) if patch_total[i] else None) for i, lab in enumerate(labels)
        },
        "config": {
            "model": str(args.model),
            "d": model.d,
            "bases": [D.k for D in model.dictionaries],
            "lambda": model.lam,
            "positive": labels[positive],
            **asdict(rule),
        },
        "wall_time": {"images": elapsed_images, "total": time.perf_counter() - t_start},
    }
    text = "".join(line + "\n" for line in flatten_report(report))
    doc = json.dumps(report, indent=2) + "\n"
    if args.json:
        Path(args.json).write_text(doc, encoding="utf-8")
    if args.text:
        Path(args.text).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="dfdl", description="Discriminative feature-oriented dictionary learning")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="write a planted-subspace PGM data set and manifest")
    s.add_argument("--out", required=True)
    s.add_argument("--classes", type=int, default=2)
    s.add_argument("--patch-size", type=int, default=10)
    s.add_argument("--atoms", type=int, default=16, help="planted atoms per class")
    s.add_argument("--sparsity", type=int, default=3)
    s.add_argument("--noise", type=float, default=0.05, help="per-pixel noise sd before normalization")
    s.add_argument("--grid", type=int, default=10, help="patches per image side")
    s.add_argument("--train-images", type=int, default=5)
    s.add_argument("--test-images", type=int, default=5)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("train", help="learn one dictionary per class")
    t.add_argument("--manifest", required=True)
    t.add_argument("--out", required=True, help="model file (.dfdl)")
    t.add_argument("--trace", help="trace log path (default: <out>.trace.txt)")
    t.add_argument("--trace-times", action="store_true", help="include wall times in the trace")
    t.add_argument("--bases", type=int, default=_DEFAULTS.k)
    t.add_argument("--sparsity", type=int, default=_DEFAULTS.L)
    t.add_argument("--rho", type=float, default=_DEFAULTS.rho)
    t.add_argument("--rho-shrink", type=float, default=_DEFAULTS.rho_shrink)
    t.add_argument("--iters", type=int, default=_DEFAULTS.max_outer_iters)
    t.add_argument("--tol", type=float, default=_DEFAULTS.objective_tol)
    t.add_argument("--sweeps", type=int, default=_DEFAULTS.sweeps)
    t.add_argument("--patch-size", type=int, default=DEFAULT_PATCH)
    t.add_argument("--patches-per-class", type=int, default=DEFAULT_PATCHES_PER_CLASS)
    t.add_argument("--sampling", choices=["random", "grid"], default="random")
    t.add_argument("--downsample", type=int, default=1)
    t.add_argument("--seed", type=int, default=_DEFAULTS.seed)
    t.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    _add_rule_flags(t, defaults=True)
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("classify", help="label one image")
    c.add_argument("--model", required=True)
    c.add_argument("image")
    c.add_argument("--positive", help="positive/target class label (default: first)")
    c.add_argument("--mask", help="write the region mask as PGM (region_detect mode)")
    c.add_argument("--grid-dump", help="write per-patch labels as TSV")
    c.add_argument("--downsample", type=int, default=1)
    _add_rule_flags(c, defaults=False)
    c.set_defaults(func=cmd_classify)

    e = sub.add_parser("eval", help="classify every test image of a manifest")
    e.add_argument("--model", required=True)
    e.add_argument("--manifest", required=True)
    e.add_argument("--positive")
    e.add_argument("--json", help="write the JSON report here")
    e.add_argument("--text", help="write the key=value report here")
    e.add_argument("--downsample", type=int, default=1)
    _add_rule_flags(e, defaults=False)
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    try:
        return args.func(args)
    except (OSError, FormatError, InvariantError) as exc:
        print(f"dfdl: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DFDLError as exc:
        print(f"dfdl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
