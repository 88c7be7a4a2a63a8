import csv
from pathlib import Path

import pytest

TABLE2_ROWS = [
    # study, m1, m2, m3, sd1, sd2, sd3, n1, n2, n3
    ("SATIETY", 11.45, 12.16, 14.73, 8.29, 8.38, 9.63, 63, 63, 42),
    ("EUFEST", 4.04, 5.35, 4.67, 5.11, 5.88, 6.44, 74, 40, 9),
    ("ZHH-FE", 3.24, 2.44, 3.64, 2.11, 1.23, 2.42, 25, 24, 21),
]

HEADER = ["study_id", "m1", "m2", "m3", "sd1", "sd2", "sd3", "n1", "n2", "n3"]


@pytest.fixture
def table2_csv(tmp_path) -> Path:
    path = tmp_path / "cohorts.csv"
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(HEADER)
        writer.writerows(TABLE2_ROWS)
    return path


@pytest.fixture
def or_records_csv(tmp_path) -> Path:
    path = tmp_path / "ors.csv"
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["study_id", "label", "or", "ci_lo", "ci_hi", "m_top", "m_bottom"])
        writer.writerow(["demo", "AB_vs_AA", 3.00, 1.05, 8.60, 30, 30])
        writer.writerow(["demo", "BB_vs_AB", 1.00, 0.36, 2.81, 30, 30])
    return path
