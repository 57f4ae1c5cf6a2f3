"""Command-line surface: validate, build-gallery, evaluate, ablate,
compare-variants, synth, report.

Every run prints the config fingerprint and seed it used, writes files
atomically (temp + rename), and produces byte-identical outputs for identical
argv and inputs regardless of --threads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, engine, figures, report, store, synth
from .engine import EvalConfig, GridSpec, RunResult
from .errors import IdrankError
from .gallery import GallerySpec, SplitConfig, curate_from_list, split_reference_gallery
from .store import Role


def _default_threads() -> int:
    env = os.environ.get("IDRANK_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="")
    os.replace(tmp, path)


def _write_json(path: Path, payload) -> None:
    _write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_set_atomic(es, path: Path, fmt: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    store.write_set(es, tmp, fmt=fmt)
    os.replace(tmp, path)


def _move_atomic(render, path: Path) -> None:
    """Render a figure to a temp name, then move it into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp.png")
    render(tmp)
    os.replace(tmp, path)


def _cmd_validate(args) -> int:
    es = store.load_set(args.set)
    if args.manifest:
        manifest = store.load_manifest(args.manifest)
        store.check_manifest(es, manifest)
    roles = {role.value: len(es.by_role(role)) for role in Role if es.by_role(role)}
    print(
        f"ok: {len(es)} records, {len(es.subjects)} subjects, "
        f"dim={es.dimension}, encoder={es.encoder}, roles={roles}"
    )
    return 0


def _cmd_synth(args) -> int:
    config = synth.SynthConfig(
        n_identities=args.identities,
        n_reference=args.references,
        n_gallery=args.gallery_per_id,
        n_generated=args.generated,
        n_prompt=args.prompts,
        dimension=args.dim,
        sigma_within=args.sigma,
        drift=args.drift,
        seed=args.seed,
        encoder=args.encoder,
        method=args.method,
    )
    es = synth.generate_synthetic_dataset(config)
    out = Path(args.out)
    suffix = "jsonl" if args.format == "jsonl" else "bin"
    _write_set_atomic(es, out / f"dataset.{suffix}", args.format)
    _write_json(out / "manifest.json", es.manifest.to_dict())
    _write_json(out / "synth_config.json", config.to_dict())
    fingerprint = engine.stable_hash(config.to_dict())
    print(f"config_fingerprint={fingerprint} seed={config.seed}")
    print(f"wrote {len(es)} records to {out / f'dataset.{suffix}'}")
    return 0


def _cmd_build_gallery(args) -> int:
    pool = store.load_set(args.set)
    config = SplitConfig(
        n_reference=args.references,
        n_gallery=args.gallery,
        strategy=args.strategy,
        seed=args.seed,
        max_subjects=args.max_subjects,
        cap_to_available=args.cap,
        curated_path=args.curated_list,
    )
    spec = split_reference_gallery(pool, config)
    _write_json(Path(args.out), spec.to_dict())
    fingerprint = engine.spec_fingerprint(spec)
    print(f"gallery_fingerprint={fingerprint} seed={config.seed}")
    print(
        f"wrote spec for {len(spec.subjects)} subjects "
        f"({sum(len(v) for v in spec.references.values())} reference, "
        f"{sum(len(v) for v in spec.galleries.values())} gallery ids) to {args.out}"
    )
    return 0


def _merge_eval_config(args) -> EvalConfig:
    """Start from --config when given; explicitly passed flags win."""
    if args.config:
        config = engine.load_eval_config(args.config)
    else:
        if not args.set:
            raise IdrankError("either --config or --set is required")
        config = EvalConfig(datasets=tuple(args.set), threads=_default_threads())
    overrides = {}
    if args.set:
        overrides["datasets"] = tuple(args.set)
    if args.gallery_spec:
        overrides["gallery_spec"] = args.gallery_spec
    if args.method:
        overrides["methods"] = tuple(args.method)
    if args.encoder:
        overrides["encoder"] = args.encoder
    if args.variant is not None:
        overrides["variant"] = args.variant
    if args.aggregation:
        overrides["aggregation"] = args.aggregation
    if args.pairwise_mode:
        overrides["pairwise_mode"] = args.pairwise_mode
    if args.scale:
        overrides["scale"] = args.scale
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = max(1, args.threads)
    return replace(config, **overrides) if overrides else config


_EVAL_COLUMNS = (
    report.Column("mAP", "map"),
    report.Column("mAP (macro)", "map-per-subject"),
    report.Column("Pairwise Sim", "pairwise"),
    report.Column("Adherence", "adherence"),
    report.Column("Top-1", "top1"),
)


def _emit_run_outputs(results: list[RunResult], config: EvalConfig, out: Path,
                      spec: GallerySpec | None, render_figures: bool) -> None:
    schema = report.TableSchema(columns=_EVAL_COLUMNS, row_key="method",
                                row_header="Method", scale=config.scale)
    _write_text(out / "results.json", report.emit_json(results))
    _write_text(out / "scores.csv", report.emit_csv(results, schema))
    _write_text(out / "scores.md", report.emit_markdown(results, schema))
    sidecar_extra = {}
    if spec is not None:
        _write_json(out / "gallery_spec.json", spec.to_dict())
        sidecar_extra["gallery_fingerprint"] = engine.spec_fingerprint(spec)
    _write_text(
        out / "sidecar.json",
        report.sidecar_json(config.fingerprint(), config.seed, **sidecar_extra),
    )
    if render_figures:
        _move_atomic(lambda p: figures.render_run_figure(results, p), out / "scores.png")


def _cmd_evaluate(args) -> int:
    config = _merge_eval_config(args)
    out = Path(args.out)
    dataset = engine.load_datasets(config)
    if args.queries == "oracle" or (
        args.queries == "auto" and not dataset.by_role(Role.GENERATED)
    ):
        results = [engine.run_oracle_eval(config, dataset)]
    else:
        results = list(engine.run_generated_eval(config, dataset).values())
    _, spec = engine.realize_gallery(config, dataset)
    _emit_run_outputs(results, config, out, spec, not args.no_figures)
    print(f"config_fingerprint={config.fingerprint()} seed={config.seed}")
    for res in results:
        print(
            f"method={res.method} map={res.map_primary:.6f} "
            f"pairwise={res.pairwise_score:.6f} queries={res.query_count}"
        )
    return 0


def _cmd_ablate(args) -> int:
    config = _merge_eval_config(args)
    values: tuple
    if args.axis == "sampling-strategy":
        values = tuple(args.values)
    else:
        values = tuple(int(v) for v in args.values)
    grid_spec = GridSpec(
        axis=args.axis,
        values=values,
        seeds=tuple(args.seeds),
        resample=args.resample,
        gallery_size=args.gallery_size,
    )
    grid = engine.run_ablation_sweep(config, grid_spec)
    out = Path(args.out)
    _write_text(out / "plotdata.csv", report.emit_plotdata(grid))
    _write_text(
        out / "sidecar.json",
        report.sidecar_json(config.fingerprint(), config.seed, axis=grid.axis),
    )
    if not args.no_figures:
        _move_atomic(lambda p: figures.render_ablation_figure(grid, p), out / "ablation.png")
    print(f"config_fingerprint={config.fingerprint()} seed={config.seed}")
    for value in grid.values:
        print(f"axis={grid.axis} value={value} map={grid.mean_map(value):.6f} "
              f"pairwise={grid.mean_pairwise(value):.6f}")
    return 0


def _cmd_compare_variants(args) -> int:
    config = _merge_eval_config(args)
    comparison = engine.compare_variants(config, args.variant_a, args.variant_b)
    out = Path(args.out)
    payload = {
        "variant_a": comparison.variant_a,
        "variant_b": comparison.variant_b,
        "result_a": comparison.result_a.to_dict(),
        "result_b": comparison.result_b.to_dict(),
        "deltas": comparison.deltas,
        "only_in_a": list(comparison.only_in_a),
        "only_in_b": list(comparison.only_in_b),
    }
    _write_json(out / "comparison.json", payload)
    _write_text(
        out / "sidecar.json",
        report.sidecar_json(config.fingerprint(), config.seed,
                            variant_a=args.variant_a, variant_b=args.variant_b),
    )
    if not args.no_figures:
        labeled = [
            replace(comparison.result_a, method=args.variant_a or "base"),
            replace(comparison.result_b, method=args.variant_b or "base"),
        ]
        _move_atomic(lambda p: figures.render_run_figure(labeled, p), out / "comparison.png")
    print(f"config_fingerprint={config.fingerprint()} seed={config.seed}")
    for key, delta in comparison.deltas.items():
        if delta is not None:
            print(f"delta {key}={delta:+.6f}")
    if comparison.only_in_a or comparison.only_in_b:
        print(f"unmatched ids: a-only={len(comparison.only_in_a)} b-only={len(comparison.only_in_b)}")
    return 0


def _cmd_report(args) -> int:
    payload = json.loads(Path(args.results).read_text(encoding="utf-8"))
    if not isinstance(payload, list):
        raise IdrankError(f"{args.results}: expected a JSON array of run results")
    results = [RunResult.from_dict(item) for item in payload]
    out = Path(args.out)
    schema = report.TableSchema(
        columns=_EVAL_COLUMNS,
        row_key=args.row_key,
        row_header="Method" if args.row_key == "method" else "Dataset",
        scale=args.scale,
        decimals=args.decimals,
    )
    _write_text(out / "table.csv", report.emit_csv(results, schema))
    _write_text(out / "table.md", report.emit_markdown(results, schema))
    fingerprints = sorted({r.config_fingerprint for r in results})
    seeds = sorted({r.seed for r in results})
    _write_text(
        out / "sidecar.json",
        report.sidecar_json(
            fingerprints[0] if len(fingerprints) == 1 else ",".join(fingerprints),
            seeds[0] if len(seeds) == 1 else -1,
        ),
    )
    if not args.no_figures:
        _move_atomic(lambda p: figures.render_run_figure(results, p), out / "table.png")
    print(f"config_fingerprint={fingerprints[0] if fingerprints else '-'} "
          f"seed={seeds[0] if len(seeds) == 1 else 'mixed'}")
    print(f"wrote tables for {len(results)} results to {out}")
    return 0


def _add_eval_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON run config; explicit flags override it")
    sub.add_argument("--set", action="append", help="embedding file (repeatable)")
    sub.add_argument("--gallery-spec", help="prebuilt gallery spec JSON")
    sub.add_argument("--method", action="append", help="generation method filter (repeatable)")
    sub.add_argument("--encoder", help="expected encoder name")
    sub.add_argument("--variant", help="variant filter")
    sub.add_argument("--aggregation", choices=list(engine.AGGREGATIONS))
    sub.add_argument("--pairwise-mode", choices=list(engine.PAIRWISE_MODES))
    sub.add_argument("--scale", choices=list(engine.SCALES))
    sub.add_argument("--seed", type=int)
    sub.add_argument("--threads", type=int, help="worker threads (never affects output bytes)")
    sub.add_argument("--no-figures", action="store_true", help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idrank",
        description="Retrieval-based evaluation of identity preservation",
    )
    parser.add_argument("--version", action="version", version=f"idrank {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("validate", help="load and validate an embedding set")
    sub.add_argument("--set", required=True)
    sub.add_argument("--manifest", help="manifest JSON to cross-check")
    sub.set_defaults(func=_cmd_validate)

    sub = subs.add_parser("synth", help="generate a synthetic labeled dataset")
    sub.add_argument("--out", required=True)
    sub.add_argument("--identities", type=int, default=10)
    sub.add_argument("--references", type=int, default=5)
    sub.add_argument("--gallery-per-id", type=int, default=10)
    sub.add_argument("--generated", type=int, default=5)
    sub.add_argument("--prompts", type=int, default=0)
    sub.add_argument("--dim", type=int, default=512)
    sub.add_argument("--sigma", type=float, default=0.05)
    sub.add_argument("--drift", type=float, default=0.0)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--encoder", default="synth-enc")
    sub.add_argument("--method", default="synthetic")
    sub.add_argument("--format", choices=["jsonl", "binary"], default="jsonl")
    sub.set_defaults(func=_cmd_synth)

    sub = subs.add_parser("build-gallery", help="split a pool into reference/gallery lists")
    sub.add_argument("--set", required=True)
    sub.add_argument("--out", required=True)
    sub.add_argument("--references", type=int, required=True)
    sub.add_argument("--gallery", type=int, required=True)
    sub.add_argument("--strategy", choices=["random", "kmeans", "curated"], default="random")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--max-subjects", type=int)
    sub.add_argument("--cap", action="store_true", help="cap sizes to subject availability")
    sub.add_argument("--curated-list", help="curated id-list file (strategy=curated)")
    sub.set_defaults(func=_cmd_build_gallery)

    sub = subs.add_parser("evaluate", help="run an evaluation and write tables")
    _add_eval_flags(sub)
    sub.add_argument("--queries", choices=["auto", "generated", "oracle"], default="auto")
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=_cmd_evaluate)

    sub = subs.add_parser("ablate", help="sweep a gallery-composition axis")
    _add_eval_flags(sub)
    sub.add_argument("--axis", choices=list(engine.ABLATION_AXES), required=True)
    sub.add_argument("--values", nargs="+", required=True)
    sub.add_argument("--seeds", nargs="+", type=int, default=[0])
    sub.add_argument("--gallery-size", type=int, help="per-subject size for the strategy axis")
    sub.add_argument("--resample", action="store_true",
                     help="draw each cell independently instead of nesting")
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=_cmd_ablate)

    sub = subs.add_parser("compare-variants", help="paired evaluation of two variants")
    _add_eval_flags(sub)
    sub.add_argument("--variant-a", required=True)
    sub.add_argument("--variant-b", required=True)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=_cmd_compare_variants)

    sub = subs.add_parser("report", help="re-emit tables and figures from saved results")
    sub.add_argument("--results", required=True, help="results.json from evaluate")
    sub.add_argument("--out", required=True)
    sub.add_argument("--row-key", choices=["dataset", "method"], default="method")
    sub.add_argument("--scale", choices=list(engine.SCALES), default="fraction")
    sub.add_argument("--decimals", type=int, default=3)
    sub.add_argument("--no-figures", action="store_true")
    sub.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except IdrankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
