"""
Screens for the report viewer.
"""
from .report import ReportScreen, build_screen

__all__ = [
    'ReportScreen',
    'build_screen',
]
