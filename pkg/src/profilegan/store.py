"""On-disk profile store shared by the CLI commands.

A store is a directory with ``meta.csv`` (site metadata), one CSV per
(site, year) under ``profiles/`` in the ingestion schema, and a
``manifest.json`` summary. Profile files are valid ingestion inputs, so
loading a store runs the same validation as first-time ingestion.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Mapping, Sequence

from .data import (
    DataError,
    HourlyProfile,
    SiteMeta,
    ingest_hourly_csv,
    read_meta_csv,
    write_profile_csv,
)

MANIFEST_NAME = "manifest.json"
STORE_SCHEMA_VERSION = 1


def store_exists(store_dir: str | Path) -> bool:
    return (Path(store_dir) / MANIFEST_NAME).exists()


def profile_filename(site_id: str, year: int) -> str:
    return f"{site_id}_{year}.csv"


def save_store(
    profiles: Sequence[HourlyProfile],
    metas: Mapping[str, SiteMeta],
    store_dir: str | Path,
    force: bool = False,
) -> None:
    """Write profiles + metadata into a store directory.

    Refuses to overwrite an existing store unless ``force`` is set.
    """
    store_dir = Path(store_dir)
    if store_exists(store_dir) and not force:
        raise DataError(f"store already exists at {store_dir}; use --force to overwrite")
    (store_dir / "profiles").mkdir(parents=True, exist_ok=True)

    with open(store_dir / "meta.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["site_id", "type", "capacity_mw", "intermittent"])
        for site_id in sorted(metas):
            meta = metas[site_id]
            writer.writerow(
                [
                    meta.site_id,
                    meta.generation_type.label,
                    f"{meta.installed_capacity_mw:g}",
                    int(meta.generation_type.intermittent_dispatch),
                ]
            )

    entries = []
    for profile in sorted(profiles, key=lambda p: (p.site_id, p.year)):
        filename = profile_filename(profile.site_id, profile.year)
        write_profile_csv(profile, store_dir / "profiles" / filename, include_site=True)
        entries.append(
            {
                "site_id": profile.site_id,
                "type": profile.generation_type.label,
                "year": profile.year,
                "hours": int(profile.values.size),
                "annual_energy_mwh": round(profile.annual_energy_mwh(), 3),
                "file": f"profiles/{filename}",
            }
        )
    manifest = {"schema_version": STORE_SCHEMA_VERSION, "profiles": entries}
    (store_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=1))


def load_store(store_dir: str | Path) -> tuple[list[HourlyProfile], dict[str, SiteMeta]]:
    """Load and re-validate every profile in a store."""
    store_dir = Path(store_dir)
    manifest_path = store_dir / MANIFEST_NAME
    if not manifest_path.exists():
        raise DataError(f"not a profile store (missing {MANIFEST_NAME}): {store_dir}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupt store manifest {manifest_path}: {exc}") from exc
    if manifest.get("schema_version") != STORE_SCHEMA_VERSION:
        raise DataError(f"unsupported store schema in {manifest_path}")

    meta_path = store_dir / "meta.csv"
    metas = read_meta_csv(meta_path)
    profiles: list[HourlyProfile] = []
    for entry in manifest.get("profiles", []):
        data_path = store_dir / entry["file"]
        loaded, _ = ingest_hourly_csv(data_path, meta_path)
        if len(loaded) != 1:
            raise DataError(f"store file {data_path} holds {len(loaded)} profiles, expected 1")
        profiles.append(loaded[0])
    if not profiles:
        raise DataError(f"store {store_dir} holds no profiles")
    return profiles, metas
