import csv

import pytest

COLUMNS = ("experiment", "nbar", "p", "f", "weighting", "realization",
           "metric", "count", "failures", "median", "q25", "q75")


def write_summary(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in rows:
            writer.writerow(r)


def summary_row(experiment, nbar, p, weighting, realization, metric, median):
    return (experiment, nbar, p, 7, weighting, realization, metric,
            100, 0, median, median * 0.8, median * 1.2)


@pytest.fixture
def sweetspot_csv(tmp_path):
    rows = []
    for realization in ("moesp", "cva"):
        for nbar in (500, 1500, 2500):
            for p in (2, 6, 10, 14):
                med = 0.05 + 0.001 * p + 10.0 / nbar
                rows.append(summary_row("sweetspot", nbar, p, "okid",
                                        realization, "pole_error", med))
                rows.append(summary_row("sweetspot", nbar, p, "okid",
                                        realization, "kappa", 0.2))
    path = tmp_path / "sweetspot_summary.csv"
    write_summary(path, rows)
    return path


@pytest.fixture
def kappa_csv(tmp_path):
    rows = []
    for weighting in ("okid", "moesp", "cva"):
        for nbar in (500, 1000, 1500, 2000, 2500):
            med = {"okid": 180, "moesp": 120, "cva": 130}[weighting] / nbar
            rows.append(summary_row("kappa", nbar, 7, weighting, "moesp",
                                    "kappa", med))
            rows.append(summary_row("kappa", nbar, 7, weighting, "moesp",
                                    "pole_error", 0.1))
    path = tmp_path / "kappa_summary.csv"
    write_summary(path, rows)
    return path


@pytest.fixture
def poles_csv(tmp_path):
    rows = []
    for realization in ("moesp", "cva"):
        for weighting in ("okid", "moesp", "cva"):
            for nbar in (500, 1000, 2000, 4000, 8000):
                med = 2.0 / (nbar ** 0.5)
                rows.append(summary_row("poles", nbar, 7, weighting,
                                        realization, "pole_error", med))
                rows.append(summary_row("poles", nbar, 7, weighting,
                                        realization, "kappa", 0.1))
    path = tmp_path / "poles_summary.csv"
    write_summary(path, rows)
    return path
