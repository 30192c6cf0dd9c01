"""
Textual viewer for saved kolmo reports.
"""
# built-in imports
import json
from pathlib import Path
from typing import Any, Dict

# third party imports
from textual import work
from textual.app import App
from textual.binding import Binding

# kolmo imports
from kolmo.ui.screens.report import build_screen
from kolmo.utils.serialization import read_json


class ReportApp(App):
    """
    Browse the tables of one summary.json (or any command report).
    """

    TITLE = "kolmo - report viewer"

    BINDINGS = [
        Binding("q", "quit", "Quit", show=True),
    ]

    def __init__(self, report_path: Path):
        """
        Initialize the application.

        Args:
            report_path: JSON report written by a kolmo command
        """
        super().__init__()
        self.report_path = Path(report_path)
        self.report: Dict[str, Any] = read_json(self.report_path)
        self.sub_title = str(self.report_path)

    def on_mount(self) -> None:
        """
        Called when app starts.
        """
        self.push_screen(build_screen(self.report))

    @work(thread=True, exclusive=True)
    def reload_report(self) -> None:
        """Re-read the report from disk and rebuild the screen."""
        try:
            report = read_json(self.report_path)
        except (OSError, json.JSONDecodeError) as e:
            self.call_from_thread(self.notify, f"Error reading report: {e}", severity="error")
            return
        self.call_from_thread(self._replace_report, report)

    def _replace_report(self, report: Dict[str, Any]) -> None:
        self.report = report
        self.switch_screen(build_screen(report))
        self.notify("Report reloaded")
