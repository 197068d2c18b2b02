"""Benchmark-versus-simulation comparison rows and their serialization."""

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import InputError

CSV_COLUMNS = ("ensemble", "r", "c", "classical_value", "classical_kind", "sim_mean", "sim_stderr", "surpasses")
SIGMA_GATE = 3.0


@dataclass
class ComparisonRow:
    ensemble: str
    r: float
    c: int
    classical_value: float
    classical_kind: str
    sim_mean: float
    sim_stderr: float
    surpasses: bool

    def as_csv(self):
        return {
            "ensemble": self.ensemble,
            "r": repr(float(self.r)),
            "c": str(int(self.c)),
            "classical_value": repr(float(self.classical_value)),
            "classical_kind": self.classical_kind,
            "sim_mean": repr(float(self.sim_mean)),
            "sim_stderr": repr(float(self.sim_stderr)),
            "surpasses": "true" if self.surpasses else "false",
        }


def surpasses(sim_mean, sim_stderr, classical_value):
    return bool(classical_value < 1 and sim_mean - classical_value > SIGMA_GATE * sim_stderr)


def _doc(x):
    return x.to_dict() if hasattr(x, "to_dict") else dict(x)


def classical_kind(bench):
    if bench.get("perfectly_preparable"):
        return "exact"
    kind = bench["kind"]
    if kind == "exact":
        return "exact"
    if kind == "upper_bound":
        return "upper"
    if bench.get("certified"):
        return "certified"
    return "lower"


def classical_value(bench):
    return 1.0 if bench.get("perfectly_preparable") else float(bench["value"])


def _radius_key(r):
    return None if r is None else round(float(r), 9)


def compare(benchmarks, sim_results):
    """Pair each benchmark with the simulation of the same ensemble and radius.

    Returns the rows and a formatted text table.
    """
    sims = {}
    for s in map(_doc, sim_results):
        sims[(s["ensemble"], _radius_key(s["radius"]))] = s
    rows = []
    for b in map(_doc, benchmarks):
        key = (b["ensemble"], _radius_key(b["radius"]))
        if key not in sims:
            raise InputError(f"no simulation for ensemble {key[0]!r} at radius {key[1]}", "identifier-mismatch")
        s = sims[key]
        cv = classical_value(b)
        rows.append(ComparisonRow(b["ensemble"], float(b["radius"]), int(b["cbits"]), cv, classical_kind(b),
                                  float(s["mean_fidelity"]), float(s["stderr"]),
                                  surpasses(s["mean_fidelity"], s["stderr"], cv)))
    return rows, format_table(rows)


def format_table(rows):
    head = f"{'ensemble':<13} {'r':>5} {'c':>2} {'classical':>10} {'kind':<10} {'simulated':>10} {'stderr':>9}  surpasses"
    lines = [head, "-" * len(head)]
    for row in rows:
        lines.append(
            f"{row.ensemble:<13} {row.r:>5.2f} {row.c:>2d} {row.classical_value:>10.6f} {row.classical_kind:<10} "
            f"{row.sim_mean:>10.6f} {row.sim_stderr:>9.2e}  {'yes' if row.surpasses else 'no'}"
        )
    return "\n".join(lines)


def emit(rows, fmt, path):
    """Write rows as ``structured`` (JSON) or ``csv``."""
    path = Path(path)
    try:
        if fmt == "csv":
            with path.open("w", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
                writer.writeheader()
                for row in rows:
                    writer.writerow(row.as_csv())
        elif fmt == "structured":
            path.write_text(json.dumps({"rows": [asdict(r) for r in rows]}, indent=2) + "\n")
        else:
            raise InputError(f"unknown format {fmt!r}", "format")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}", "unwritable") from exc


def load_rows(path):
    path = Path(path)
    if path.suffix == ".csv":
        with path.open(newline="") as fh:
            return [
                ComparisonRow(d["ensemble"], float(d["r"]), int(d["c"]), float(d["classical_value"]),
                              d["classical_kind"], float(d["sim_mean"]), float(d["sim_stderr"]), d["surpasses"] == "true")
                for d in csv.DictReader(fh)
            ]
    return [ComparisonRow(**d) for d in json.loads(path.read_text())["rows"]]
