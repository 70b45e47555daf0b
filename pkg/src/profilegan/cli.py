"""Command-line pipeline: ingest/synth-data -> train -> generate -> evaluate/compare.

Every command is reproducible: seeds are explicit, outputs carry a manifest
with the config that produced them, and nothing reads the wall clock.

Exit codes: 0 success, 1 usage error, 2 data error, 3 training divergence,
4 partial generation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import zlib
from pathlib import Path
from typing import Sequence

import numpy as np

from . import gan, metrics, store, synthetic
from .data import (
    DataError,
    HourlyProfile,
    build_training_set,
    build_type_registry,
    hours_in_year,
    ingest_hourly_csv,
    registry_for_labels,
    write_profile_csv,
)
from .outage import OutageConfig, inject_outages
from .synthesis import ForecastTarget, SynthesisConfig, SynthesisError, generate_portfolio

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGENCE = 3
EXIT_PARTIAL = 4

GENERATED_MANIFEST = "manifest.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; the contract here is 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="profilegan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate raw CSVs into a profile store")
    p.add_argument("--data", required=True, help="hourly data CSV (timestamp,site_id,power_mw)")
    p.add_argument("--meta", required=True, help="site metadata CSV (site_id,type,capacity_mw,intermittent)")
    p.add_argument("--out", required=True, help="store directory to create")
    p.add_argument("--force", action="store_true", help="overwrite an existing store")

    p = sub.add_parser("synth-data", help="write a synthetic profile store with known statistics")
    p.add_argument("--out", required=True)
    p.add_argument("--families", help="family spec JSON; defaults to the built-in 3-family set")
    p.add_argument("--years", default="2017,2018,2019", help="comma-separated calendar years")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("train", help="train a GAN on a profile store")
    p.add_argument("--store", required=True)
    p.add_argument("--mode", choices=["single", "multi"], required=True)
    p.add_argument("--type", dest="type_label", help="generation type (required for --mode single)")
    p.add_argument("--config", help="GAN config JSON (fields of GanConfig)")
    p.add_argument("--epochs", type=int, help="override config epochs")
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument("--out", required=True, help="checkpoint file to write")

    p = sub.add_parser("generate", help="synthesize yearly profiles for forecast targets")
    p.add_argument("--model", required=True, help="trained checkpoint")
    p.add_argument("--store", required=True, help="historical store (ramp/envelope statistics)")
    p.add_argument("--targets", required=True, help="forecast targets JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="synthesis config JSON (fields of SynthesisConfig)")
    p.add_argument("--seed", type=int, help="master seed (overrides config seed)")
    p.add_argument("--for", dest="outage_rate", type=float, default=0.0,
                   help="forced outage rate; 0 disables outage injection")
    p.add_argument("--mttr", type=float, default=24.0, help="mean time to repair, hours")

    p = sub.add_parser("evaluate", help="score generated profiles against history")
    p.add_argument("--generated", required=True, help="directory written by generate")
    p.add_argument("--store", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--out", required=True, help="directory for report files")

    p = sub.add_parser("compare", help="evaluate GAN output against the traditional baselines")
    p.add_argument("--generated", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0, help="seed for the random-sampling baseline")
    return parser


# ---------------------------------------------------------------------------
# Shared helpers


def load_targets(path: str | Path) -> list[ForecastTarget]:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise DataError(f"cannot read targets file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"targets file {path} is not valid JSON: {exc}") from exc
    entries = doc["targets"] if isinstance(doc, dict) and "targets" in doc else doc
    if not isinstance(entries, list) or not entries:
        raise DataError(f"targets file {path} holds no targets")
    targets = []
    for i, entry in enumerate(entries):
        try:
            shares = entry.get("monthly_shares")
            targets.append(
                ForecastTarget(
                    site_id=entry["site_id"],
                    generation_type=entry["type"],
                    target_year=int(entry["target_year"]),
                    annual_energy_mwh=float(entry["annual_energy_mwh"]),
                    monthly_shares=np.asarray(shares, dtype=np.float64) if shares is not None else None,
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"targets file {path} entry {i}: {exc}") from exc
    return targets


def _read_generated_profile(path: Path, site_id: str, year: int, gtype) -> HourlyProfile:
    values = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "power_mw" not in reader.fieldnames:
            raise DataError(f"generated file {path}: missing power_mw column")
        for row in reader:
            values.append(float(row["power_mw"]))
    if len(values) != hours_in_year(year):
        raise DataError(
            f"generated file {path}: {len(values)} rows, expected {hours_in_year(year)}"
        )
    return HourlyProfile(site_id=site_id, generation_type=gtype, year=year, values=np.asarray(values))


def _load_generated(generated_dir: Path, metas) -> list[HourlyProfile]:
    manifest_path = generated_dir / GENERATED_MANIFEST
    if not manifest_path.exists():
        raise DataError(f"generated directory {generated_dir} has no {GENERATED_MANIFEST}")
    manifest = json.loads(manifest_path.read_text())
    profiles = []
    for entry in manifest.get("outputs", []):
        site_id, year = entry["site_id"], int(entry["year"])
        meta = metas.get(site_id)
        if meta is None:
            raise DataError(f"generated site {site_id!r} not present in the store metadata")
        profiles.append(
            _read_generated_profile(generated_dir / entry["file"], site_id, year, meta.generation_type)
        )
    if not profiles:
        raise DataError(f"generated directory {generated_dir} lists no outputs")
    return profiles


def _load_json_config(path: str | None, cls, overrides: dict):
    fields = {}
    if path:
        try:
            fields = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config {path}: {exc}") from exc
    fields.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return cls(**fields)
    except (TypeError, ValueError) as exc:
        raise DataError(f"bad config: {exc}") from exc


def _history_for_type(profiles: Sequence[HourlyProfile], type_label: str) -> list[HourlyProfile]:
    history = [p for p in profiles if p.generation_type.label == type_label]
    if not history:
        raise DataError(f"store holds no history for type {type_label!r}")
    return history


# ---------------------------------------------------------------------------
# Commands


def cmd_ingest(args) -> int:
    profiles, metas = ingest_hourly_csv(args.data, args.meta)
    store.save_store(profiles, metas, args.out, force=args.force)
    for p in sorted(profiles, key=lambda p: (p.site_id, p.year)):
        print(
            f"ingested {p.site_id} {p.year}: {p.values.size} hours, "
            f"{p.annual_energy_mwh():.3f} MWh"
        )
    print(f"store written to {args.out}")
    return EXIT_OK


def cmd_synth_data(args) -> int:
    years = tuple(int(y) for y in str(args.years).split(",") if y.strip())
    if not years:
        raise UsageError("--years must name at least one year")
    families = (
        synthetic.load_family_specs(args.families)
        if args.families
        else synthetic.default_spec().families
    )
    spec = synthetic.SynthDataSpec(families=families, years=years, seed=args.seed)
    profiles, metas = synthetic.make_profiles(spec)
    store.save_store(profiles, metas, args.out, force=args.force)
    for p in profiles:
        print(
            f"synthesized {p.site_id} ({p.generation_type.label}) {p.year}: "
            f"{p.annual_energy_mwh():.3f} MWh"
        )
    print(f"store written to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    profiles, metas = store.load_store(args.store)
    registry = build_type_registry(
        (m.generation_type.label, m.generation_type.intermittent_dispatch) for m in metas.values()
    )
    config = _load_json_config(
        args.config, gan.GanConfig, {"epochs": args.epochs, "seed": args.seed}
    )
    if args.mode == "single":
        if not args.type_label:
            raise UsageError("--mode single requires --type")
        types = registry_for_labels(registry, [args.type_label])
        training_profiles = _history_for_type(profiles, args.type_label)
        mode = gan.MODE_SINGLE
    else:
        if len(registry) < 2:
            raise DataError("multi-type training requires >= 2 generation types in the store")
        if args.type_label:
            raise UsageError("--type is only valid with --mode single")
        types = registry
        training_profiles = profiles
        mode = gan.MODE_MULTI

    dataset = build_training_set(training_profiles, metas, types, config.duty_threshold)
    print(f"training {mode} GAN on {len(dataset)} daily samples ({len(types)} type(s))")
    model = gan.train(dataset, config, mode, types)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    gan.save_model(model, out_path)

    losses_path = out_path.with_suffix(out_path.suffix + ".losses.csv")
    with open(losses_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "discriminator_loss", "generator_loss"])
        history = model.loss_history
        for e, (dl, gl) in enumerate(zip(history["discriminator"], history["generator"])):
            writer.writerow([e, f"{dl:.6f}", f"{gl:.6f}"])
    if model.loss_history["discriminator"]:
        print(
            f"final losses: discriminator {model.loss_history['discriminator'][-1]:.4f}, "
            f"generator {model.loss_history['generator'][-1]:.4f}"
        )
    print(f"checkpoint written to {out_path}")
    return EXIT_OK


def cmd_generate(args) -> int:
    model = gan.load_model(args.model)
    profiles, metas = store.load_store(args.store)
    targets = load_targets(args.targets)
    config = _load_json_config(args.config, SynthesisConfig, {"seed": args.seed})
    if not 0 <= args.outage_rate < 1:
        raise UsageError("--for must be in [0, 1)")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    generated, errors = generate_portfolio(model, targets, profiles, metas, config)

    outage_doc = None
    if args.outage_rate > 0:
        outage_doc = {"forced_outage_rate": args.outage_rate, "mean_time_to_repair": args.mttr}
        generated = [
            inject_outages(
                p,
                OutageConfig(
                    forced_outage_rate=args.outage_rate,
                    mean_time_to_repair=args.mttr,
                    seed=0,
                ),
                rng=np.random.default_rng(
                    [config.seed, zlib.crc32(p.site_id.encode("utf-8")), p.year, 1]
                ),
            )
            for p in generated
        ]

    outputs = []
    for p in generated:
        filename = store.profile_filename(p.site_id, p.year)
        write_profile_csv(p, out_dir / filename)
        outputs.append(
            {
                "site_id": p.site_id,
                "year": p.year,
                "file": filename,
                "annual_energy_mwh": round(p.annual_energy_mwh(), 3),
            }
        )
        print(f"generated {p.site_id} {p.year}: {p.annual_energy_mwh():.3f} MWh -> {filename}")

    error_docs = [
        {"site_id": site, "year": year, "error": message}
        for (site, year), message in sorted(errors.items())
    ]
    for doc in error_docs:
        print(f"FAILED {doc['site_id']} {doc['year']}: {doc['error']}", file=sys.stderr)

    manifest = {
        "schema_version": 1,
        "seed": config.seed,
        "synthesis_config": {
            "ramp_percentile": config.ramp_percentile,
            "max_resamples": config.max_resamples,
            "blend_weight": config.blend_weight,
            "duty_threshold": config.duty_threshold,
            "seed": config.seed,
        },
        "outage": outage_doc,
        "outputs": outputs,
        "errors": error_docs,
    }
    (out_dir / GENERATED_MANIFEST).write_text(json.dumps(manifest, indent=1))
    return EXIT_PARTIAL if errors else EXIT_OK


def _evaluation_inputs(args):
    profiles, metas = store.load_store(args.store)
    targets = load_targets(args.targets)
    type_labels = {t.generation_type for t in targets}
    if len(type_labels) != 1:
        raise DataError("all targets in one evaluation must share a generation type")
    type_label = type_labels.pop()
    generated = _load_generated(Path(args.generated), metas)
    generated = [p for p in generated if p.generation_type.label == type_label]
    if not generated:
        raise DataError(f"generated directory holds no profiles of type {type_label!r}")
    wanted = {(t.site_id, t.target_year) for t in targets}
    generated = [p for p in generated if (p.site_id, p.year) in wanted]
    if len(generated) != len(wanted):
        have = {(p.site_id, p.year) for p in generated}
        raise DataError(f"generated directory is missing target years: {sorted(wanted - have)}")
    history = _history_for_type(profiles, type_label)
    return generated, history, targets, metas, type_label


def _write_reports(out_dir: Path, rows: dict[str, metrics.MetricsReport]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {method: report.to_dict() for method, report in rows.items()}
    (out_dir / "report.json").write_text(json.dumps(doc, indent=1))
    with open(out_dir / "report.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method"] + metrics.MetricsReport.csv_header())
        for method, report in rows.items():
            writer.writerow([method] + report.csv_row())


def cmd_evaluate(args) -> int:
    generated, history, targets, metas, _ = _evaluation_inputs(args)
    report = metrics.evaluate(generated, history, targets, metas)
    _write_reports(Path(args.out), {"gan": report})
    print(json.dumps({"gan": report.to_dict()}, indent=1))
    return EXIT_OK


def cmd_compare(args) -> int:
    generated, history, targets, metas, _ = _evaluation_inputs(args)
    rows = {"gan": metrics.evaluate(generated, history, targets, metas)}

    average = [metrics.average_profile_baseline(history, t) for t in targets]
    rows["average_profile"] = metrics.evaluate(average, history, targets, metas)

    sampled = [
        metrics.random_sampling_baseline(
            history, t, seed=int(np.random.default_rng([args.seed, t.target_year]).integers(2**31))
        )
        for t in targets
    ]
    rows["random_sampling"] = metrics.evaluate(sampled, history, targets, metas)

    _write_reports(Path(args.out), rows)
    header = ["method"] + metrics.MetricsReport.csv_header()
    print("  ".join(header))
    for method, report in rows.items():
        print("  ".join([method] + report.csv_row()))
    return EXIT_OK


_COMMANDS = {
    "ingest": cmd_ingest,
    "synth-data": cmd_synth_data,
    "train": cmd_train,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except gan.TrainingDivergence as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (DataError, gan.CheckpointError, SynthesisError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
