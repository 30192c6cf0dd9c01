"""
Sortable table of report rows.
"""
# builtin imports
from typing import Any, Dict, List, Optional

# third party imports
from rich.text import Text
from textual.widgets import DataTable

# kolmo imports
from kolmo.ui.tables import Row

MAX_COLUMNS = 12


def format_cell(value: Any) -> Any:
    """Short cell text: floats in 6 significant digits, booleans coloured."""
    if isinstance(value, bool):
        return Text("yes", style="green") if value else Text("no", style="bold red")
    if isinstance(value, float):
        return f"{value:.6g}"
    if value is None:
        return "-"
    if isinstance(value, list):
        return f"[{len(value)} values]"
    return str(value)


class RowListWidget(DataTable):
    """
    DataTable of report rows with sorting by header click.

    Columns are the scalar keys of the first rows, in order of appearance.
    """

    def __init__(self, *args, **kwargs):
        """Initialize the row list widget."""
        super().__init__(*args, **kwargs)
        self.rows_data: List[Row] = []
        self.keys: List[str] = []
        self.cursor_type = "row"
        self._sort_column: Optional[int] = None
        self._sort_reverse = False
        self._original_column_labels: Dict[Any, str] = {}

    def add_column(self, label: str, *args, **kwargs) -> Any:
        """Override to store original label."""
        key = super().add_column(label, *args, **kwargs)
        # Store clean label without sort indicators for future updates
        clean_label = str(label).replace(" ▲", "").replace(" ▼", "")
        self._original_column_labels[key] = clean_label
        return key

    def _update_sort_indicators(self) -> None:
        """Update column headers with sort indicators."""
        for idx, key in enumerate(list(self.columns.keys())):
            col = self.columns[key]
            original_label = self._original_column_labels.get(key, str(col.label))
            if idx == self._sort_column:
                arrow = " ▼" if self._sort_reverse else " ▲"
                col.label = Text(f"{original_label}{arrow}")
            else:
                col.label = Text(original_label)
        self.refresh()

    def setup_columns(self, rows: List[Row]) -> None:
        """Derive the column set from the rows."""
        keys: List[str] = []
        for row in rows:
            for key, value in row.items():
                if key not in keys and not isinstance(value, list):
                    keys.append(key)
        self.keys = keys[:MAX_COLUMNS]
        self.clear(columns=True)
        self._original_column_labels = {}
        for key in self.keys:
            self.add_column(key, key=key)

    def load_rows(self, rows: List[Row]) -> None:
        """
        Load rows into the table, keeping the current sort if any.
        """
        self.rows_data = list(rows)
        if not self.keys:
            self.setup_columns(self.rows_data)
        if self._sort_column is not None:
            self._sort_rows(self._sort_column, self._sort_reverse)
        self.clear()
        self._update_sort_indicators()
        for idx, row in enumerate(self.rows_data):
            self.add_row(*(format_cell(row.get(k)) for k in self.keys), key=f"row_{idx}")

    def get_selected_row(self) -> Optional[Row]:
        """
        Get the currently selected row.

        Returns:
            The selected row, or None if no valid selection
        """
        if 0 <= self.cursor_row < len(self.rows_data):
            return self.rows_data[self.cursor_row]
        return None

    @staticmethod
    def sort_key(row: Row, key: str) -> Any:
        """Numbers before text, missing values last."""
        value = row.get(key)
        if value is None:
            return (2, 0.0, "")
        if isinstance(value, (int, float)):
            return (0, float(value), "")
        return (1, 0.0, str(value))

    def on_data_table_header_selected(self, event: DataTable.HeaderSelected) -> None:
        """
        Handle column header clicks to sort the table.

        Args:
            event: The header selection event
        """
        event.stop()
        column_index = event.column_index
        if self._sort_column == column_index:
            self._sort_reverse = not self._sort_reverse
        else:
            self._sort_column = column_index
            self._sort_reverse = False
        self.load_rows(self.rows_data)

    def _sort_rows(self, column_index: int, reverse: bool = False) -> None:
        """
        Sort rows by the specified column.

        Args:
            column_index: The column index to sort by
            reverse: Whether to reverse the sort order
        """
        key = self.keys[column_index]
        self.rows_data.sort(key=lambda row: self.sort_key(row, key), reverse=reverse)
