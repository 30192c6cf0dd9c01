"""
Flatten command reports into named tables of rows for the viewer.
"""
# built-in imports
from typing import Any, Dict, List

Row = Dict[str, Any]


def _is_scalar(value: Any) -> bool:
    return value is None or isinstance(value, (bool, int, float, str))


def flatten_row(row: Row, prefix: str = "") -> Row:
    """Nested dictionaries become dotted keys; lists are kept as values."""
    flat: Row = {}
    for key, value in row.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten_row(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def _rows(value: Any) -> List[Row]:
    if isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
        return [flatten_row(v) for v in value]
    if isinstance(value, dict) and isinstance(value.get("rows"), list):
        return _rows(value["rows"])
    return []


def report_tables(report: Dict[str, Any]) -> Dict[str, List[Row]]:
    """
    Tables found in a report: every list of records (directly or under a
    "rows" key), the identity checks of every order, and a "summary" table of
    the remaining scalar fields.
    """
    tables: Dict[str, List[Row]] = {}
    summary: List[Row] = []

    def visit(section: str, value: Any) -> None:
        if section == "orders" and isinstance(value, list):
            checks = [flatten_row(check) for order in value for check in order.get("checks", [])]
            tables["checks"] = checks
            return
        rows = _rows(value)
        if rows:
            tables[section] = rows
        if isinstance(value, dict):
            for key, inner in value.items():
                if key == "rows":
                    continue
                if isinstance(inner, (dict, list)):
                    visit(f"{section}.{key}", inner)
                elif _is_scalar(inner):
                    summary.append({"field": f"{section}.{key}", "value": inner})
        elif _is_scalar(value):
            summary.append({"field": section, "value": value})

    for key, value in report.items():
        visit(key, value)
    tables["summary"] = summary
    return tables
