"""
Detail pane for one report row.
"""
# built-in imports
from typing import Any, Optional

# Third party imports
from textual.app import ComposeResult
from textual.message import Message
from textual.widgets import Static, Label
from textual.containers import ScrollableContainer, Horizontal

# kolmo imports
from kolmo.ui.tables import Row


class RowDetailWidget(ScrollableContainer):
    """
    Shows every field of the selected row, full precision.
    """

    class Close(Message):
        """Message sent when the close button is pressed."""

    DEFAULT_CSS = """
    RowDetailWidget {
        border: solid $primary;
        padding: 1;
    }

    .status-ok {
        color: $success;
        text-style: bold;
    }

    .status-critical {
        color: $error;
        text-style: bold;
    }

    .detail-header {
        height: auto;
        align: right top;
        margin-bottom: 1;
    }

    #close-detail {
        width: auto;
        height: 1;
        background: $error;
        color: white;
    }
    """

    def __init__(self, *args, **kwargs):
        """Initialize the row detail widget."""
        super().__init__(*args, **kwargs)
        self.current_row: Optional[Row] = None

    def compose(self) -> ComposeResult:
        """Create the detail view components."""
        with Horizontal(classes="detail-header"):
            yield Label("[X]", id="close-detail")
        yield Static("Select a row to view details", id="detail-content")

    def on_click(self, event) -> None:
        """Handle click events."""
        if event.widget.id == "close-detail":
            self.post_message(self.Close())
            event.stop()

    @staticmethod
    def format_value(value: Any) -> str:
        """Full-precision value with pass/fail markup for booleans."""
        if isinstance(value, bool):
            return "[green]yes[/green]" if value else "[bold red]no[/bold red]"
        if isinstance(value, float):
            return repr(value)
        if isinstance(value, list):
            return ", ".join(RowDetailWidget.format_value(v) for v in value)
        if value is None:
            return "[dim]n/a[/dim]"
        return str(value)

    def format_row(self, row: Row) -> str:
        """
        Format a row for display.

        Args:
            row: The row to format

        Returns:
            Rich-formatted string ready for display
        """
        lines = []
        for key, value in row.items():
            lines.append(f"[b]{key}[/b]: {self.format_value(value)}")
        return "\n".join(lines)

    def show_row(self, row: Row) -> None:
        """
        Display details for the given row.

        Args:
            row: The row to display
        """
        self.current_row = row
        content = self.query_one("#detail-content", Static)
        content.update(self.format_row(row))

    def clear(self) -> None:
        """Clear the detail view."""
        self.current_row = None
        content = self.query_one("#detail-content", Static)
        content.update("Select a row to view details")
