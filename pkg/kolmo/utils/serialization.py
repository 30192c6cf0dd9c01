"""
JSON reports and CSV density snapshots.
"""
# built-in imports
import json
import math
from pathlib import Path
from typing import Any, Dict

# third party imports
import numpy as np

# kolmo imports
from kolmo.grid import GridMeasure

CSV_FORMAT = "%.17g"


def to_plain(value: Any) -> Any:
    """
    Convert numpy scalars/arrays, tuples and dataclass-like objects with
    ``to_dict`` to JSON-compatible Python values; non-finite floats become None.
    """
    if hasattr(value, "to_dict"):
        return to_plain(value.to_dict())
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps(data: Any) -> str:
    """
    Deterministic JSON text: sorted keys, floats in shortest round-trip form
    (exact to 17 significant digits).
    """
    return json.dumps(to_plain(data), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(data: Any, path: Path) -> Path:
    """Write a report, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(data))
    return path


def read_json(path: Path) -> Dict[str, Any]:
    """Read a report written by write_json."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Report not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_density_csv(measure: GridMeasure, path: Path) -> Path:
    """
    One row per cell: coordinates x1..x{dim}, then the density.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ",".join([f"x{k + 1}" for k in range(measure.dim)] + ["density"])
    table = np.column_stack([measure.points, measure.density])
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt=CSV_FORMAT)
    return path
