#!/usr/bin/env python

"""Provide qevolve-fetch, which downloads the UCI benchmark datasets.

The raw UCI files are kept under <data_dir>/raw and rewritten as <data_dir>/<name>.csv
with a header row, the feature columns first and the class label last, which is the
layout load_dataset reads.

For command line options, run:
    'qevolve-fetch -h'
"""

# cSpell:ignore wdbc, urlretrieve

import argparse
import csv
import logging
import sys
import urllib.request
from pathlib import Path
from typing import List, Optional, Sequence
from urllib.error import URLError

from qevolve.circuits.exceptions import DatasetError
from qevolve.evolution.config import DATASETS, DatasetName

RAW_DIR = "raw"


def convert_rows(name: DatasetName, text: str) -> List[List[str]]:
    """Return the data rows of a raw UCI file as [features..., label].

    Raw layouts:
        iris -- comma separated, label last.
        seeds -- whitespace separated, label last.
        wine -- comma separated, label first.
        breast_cancer -- comma separated id, diagnosis, then the features.

    Raises:
        DatasetError -- For rows with the wrong number of fields.
    """
    info = DATASETS[name]
    rows = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split() if name is DatasetName.SEEDS else line.strip().split(",")

        if name is DatasetName.WINE:
            fields = fields[1:] + fields[:1]
        elif name is DatasetName.BREAST_CANCER:
            fields = fields[2:] + fields[1:2]

        if len(fields) != info.num_features + 1:
            raise DatasetError(
                f"{name.value}: expected {info.num_features + 1} fields, found "
                f"{len(fields)}",
                line_number,
            )
        rows.append([field.strip() for field in fields])
    return rows


def write_csv(name: DatasetName, rows: Sequence[Sequence[str]], csv_path: Path) -> None:
    """Write rows in the canonical layout, with a header row."""
    info = DATASETS[name]
    header = [f"feature_{index + 1}" for index in range(info.num_features)]
    with csv_path.open("wt", newline="", encoding="utf-8") as file_handle:
        writer = csv.writer(file_handle)
        writer.writerow([*header, "label"])
        writer.writerows(rows)


def fetch_dataset(name: DatasetName, data_dir: Path, force: bool = False) -> Path:
    """Download a dataset (unless already present) and write its canonical CSV.

    Arguments:
        name {DatasetName} -- Dataset to fetch.
        data_dir {Path} -- Destination directory.

    Keyword Arguments:
        force {bool} -- Download again even if the raw file exists. (default: {False})

    Raises:
        DatasetError -- If the download fails or the file has an unexpected layout.

    Returns:
        Path -- The canonical CSV file.
    """
    info = DATASETS[name]
    raw_dir = data_dir / RAW_DIR
    raw_dir.mkdir(parents=True, exist_ok=True)
    raw_path = raw_dir / info.url.rsplit("/", 1)[-1]

    if force or not raw_path.is_file():
        logging.info(  # pylint: disable=logging-fstring-interpolation
            f"Downloading {info.url}"
        )
        try:
            urllib.request.urlretrieve(info.url, raw_path)
        except (URLError, OSError) as exc:
            raise DatasetError(f"Cannot download {info.url}: {exc}") from exc

    rows = convert_rows(name, raw_path.read_text(encoding="utf-8"))
    if len(rows) != info.num_rows:
        logging.warning(  # pylint: disable=logging-fstring-interpolation
            f"{raw_path} has {len(rows)} rows, expected {info.num_rows}."
        )

    csv_path = data_dir / info.file_name
    write_csv(name, rows, csv_path)
    logging.info(  # pylint: disable=logging-fstring-interpolation
        f"Wrote {len(rows)} rows to {csv_path}."
    )
    return csv_path


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Provide the command line entry point for qevolve-fetch."""
    parser = argparse.ArgumentParser(
        prog="qevolve-fetch",
        description="Download the UCI benchmark datasets and write them in the CSV "
        "layout used by qevolve.",
    )
    parser.add_argument(
        "data_dir",
        nargs="?",
        default="data",
        help="Destination directory (default: data).",
    )
    parser.add_argument(
        "--dataset",
        action="append",
        choices=[name.value for name in DatasetName],
        help="Dataset to fetch. Can be repeated. Defaults to all four.",
    )
    parser.add_argument(
        "--force", action="store_true", help="Download again even if files exist."
    )
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")

    names = (
        [DatasetName(value) for value in args.dataset]
        if args.dataset
        else list(DatasetName)
    )
    try:
        for name in names:
            fetch_dataset(name, Path(args.data_dir), args.force)
    except DatasetError as exc:
        print(f"qevolve-fetch: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
