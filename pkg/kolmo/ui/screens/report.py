"""
Report screen: one tab per table found in a saved report.
"""
# Built-in imports
from typing import Dict, List

# 3rd party imports
from textual.app import ComposeResult
from textual.screen import Screen
from textual.widgets import Header, Footer, TabbedContent, TabPane, DataTable
from textual.containers import Horizontal, Container
from textual.binding import Binding

# kolmo imports
from kolmo.ui.tables import Row, report_tables
from kolmo.ui.widgets import RowListWidget, RowDetailWidget
from kolmo.utils.checks import check_report


def tab_id(name: str) -> str:
    """Widget-safe id for a table name."""
    return "t-" + "".join(c if c.isalnum() else "-" for c in name)


class ReportScreen(Screen):
    """
    Tabbed list/detail view of a report held by the app.
    """

    # Percentage for the list pane when the detail pane is open
    split_ratio = 60
    detail_visible: bool = False

    BINDINGS = [
        Binding("r", "reload", "Reload", show=True, priority=True),
        Binding("[", "resize_panels('shrink')", "Shrink Left", show=False, priority=True),
        Binding("]", "resize_panels('grow')", "Grow Left", show=False, priority=True),
        Binding("escape", "hide_detail", "Close Detail", show=False, priority=True),
    ]

    CSS = """
    Horizontal.split-view {
        height: 1fr;
    }

    .list-pane {
        width: 100%;
        border-right: solid $primary;
    }

    .detail-pane {
        width: 40%;
        height: 100%;
    }

    .hidden {
        display: none;
    }
    """

    def __init__(self, tables: Dict[str, List[Row]], *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.tables = tables

    def compose(self) -> ComposeResult:
        """
        Create the tabbed layout.
        """
        yield Header()
        with TabbedContent():
            for name in self.tables:
                ident = tab_id(name)
                with TabPane(name, id=ident):
                    with Horizontal(classes="split-view"):
                        with Container(classes="list-pane"):
                            yield RowListWidget(id=f"{ident}-list")
                        with Container(classes="detail-pane"):
                            yield RowDetailWidget(id=f"{ident}-detail")
        yield Footer()

    def on_mount(self) -> None:
        """
        Fill the tables and report the verdict.
        """
        self.update_panel_visibility(False)
        self.load_tables()
        self.notify_verdict()

    def load_tables(self) -> None:
        """Push every table's rows into its list widget."""
        for name, rows in self.tables.items():
            widget = self.query_one(f"#{tab_id(name)}-list", RowListWidget)
            widget.load_rows(rows)

    def notify_verdict(self) -> None:
        """Show the pass/fail line of the report."""
        ok, message = check_report(self.app.report)
        self.notify(message, severity="information" if ok else "error")

    def update_panel_visibility(self, visible: bool) -> None:
        """
        Update the visibility of the detail pane.

        Args:
            visible: Whether the detail pane should be visible
        """
        self.detail_visible = visible
        for pane in self.query(".list-pane"):
            pane.styles.width = f"{self.split_ratio}%" if visible else "100%"
        for pane in self.query(".detail-pane"):
            if visible:
                pane.remove_class("hidden")
                pane.styles.width = f"{100 - self.split_ratio}%"
            else:
                pane.add_class("hidden")

    def on_data_table_row_selected(self, event: DataTable.RowSelected) -> None:
        """
        Show the selected row in the matching detail pane.
        """
        list_widget = event.data_table
        if not isinstance(list_widget, RowListWidget):
            return
        row = list_widget.get_selected_row()
        if row is None or not list_widget.id:
            return
        # "t-runs-list" -> "t-runs-detail"
        detail_id = list_widget.id[:-len("-list")] + "-detail"
        self.query_one(f"#{detail_id}", RowDetailWidget).show_row(row)
        self.update_panel_visibility(True)

    def on_row_detail_widget_close(self, _event: RowDetailWidget.Close) -> None:
        """Close button in a detail pane."""
        self.action_hide_detail()

    def action_hide_detail(self) -> None:
        """Hide the detail pane."""
        for detail in self.query(RowDetailWidget):
            detail.clear()
        self.update_panel_visibility(False)

    def action_reload(self) -> None:
        """Re-read the report file."""
        self.app.reload_report()

    def action_resize_panels(self, direction: str) -> None:
        """
        Resize the split panels.

        Args:
            direction: Either 'grow' to increase left panel or 'shrink' to decrease it
        """
        if direction == 'grow':
            self.split_ratio = min(90, self.split_ratio + 5)
        elif direction == 'shrink':
            self.split_ratio = max(10, self.split_ratio - 5)
        if self.detail_visible:
            self.update_panel_visibility(True)
        self.notify(f"Panel ratio: {self.split_ratio}% / {100 - self.split_ratio}%")


def build_screen(report: Dict) -> ReportScreen:
    """Screen for a parsed report."""
    return ReportScreen(report_tables(report))
