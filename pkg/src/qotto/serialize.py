"""Deterministic CSV/JSON emission of trajectories and tables.

Floats are written in scientific notation with 17 significant digits,
enough to read back the identical double.  NaN and infinities are
spelled ``nan``, ``inf`` and ``-inf`` in CSV; JSON uses Python's
``NaN``/``Infinity`` tokens.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .bloch import BVector
from .thermo import ThermoSample

TRAJECTORY_COLUMNS = (
    "t", "branch", "omega", "b1", "b2", "b3", "b4", "b5", "E", "S_E", "S_VN",
    "T_dyn", "phase_modulus", "phi", "phi_B", "W", "Q",
)


def fmt(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.16e" % x


def sample_row(s: ThermoSample):
    b = s.b
    return (
        s.time, s.branch, s.omega, b.b1, b.b2, b.b3, b.b4, b.b5, s.energy, s.entropy_energy,
        s.entropy_vn, s.dyn_temperature, s.phase_modulus, s.phase, s.correlation_phase,
        s.cumulative_work, s.cumulative_heat,
    )


def sample_dict(s: ThermoSample):
    return dict(zip(TRAJECTORY_COLUMNS, sample_row(s)))


def _open(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.open("w", newline="")


def write_table(path, columns, rows, fmt_name="csv"):
    """Write rows (sequences aligned with ``columns``) as CSV or a JSON list of objects."""
    rows = [tuple(r) for r in rows]
    with _open(path) as fh:
        if fmt_name == "csv":
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([fmt(v) for v in r])
        elif fmt_name == "json":
            json.dump([dict(zip(columns, r)) for r in rows], fh, indent=1)
            fh.write("\n")
        else:
            raise ValueError(f"unknown format {fmt_name!r}")


def write_trajectory(path, samples, fmt_name="csv"):
    write_table(path, TRAJECTORY_COLUMNS, [sample_row(s) for s in samples], fmt_name)


def write_json(path, obj):
    with _open(path) as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def _parse(v):
    if v in ("true", "false"):
        return v == "true"
    try:
        return float(v)
    except ValueError:
        return v


def read_table(path):
    """Rows of a CSV or JSON table as dicts; numeric CSV cells become floats."""
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("["):
        return json.loads(text)
    reader = csv.DictReader(text.splitlines())
    return [{k: _parse(v) for k, v in row.items()} for row in reader]


def read_trajectory(path):
    """Parse a trajectory file back into :class:`ThermoSample` objects."""
    out = []
    for row in read_table(path):
        out.append(
            ThermoSample(
                time=float(row["t"]),
                branch=str(row["branch"]),
                omega=float(row["omega"]),
                b=BVector(*(float(row[k]) for k in ("b1", "b2", "b3", "b4", "b5"))),
                energy=float(row["E"]),
                entropy_energy=float(row["S_E"]),
                entropy_vn=float(row["S_VN"]),
                dyn_temperature=float(row["T_dyn"]),
                phase_modulus=float(row["phase_modulus"]),
                phase=float(row["phi"]),
                correlation_phase=float(row["phi_B"]),
                cumulative_work=float(row["W"]),
                cumulative_heat=float(row["Q"]),
            )
        )
    return out
