"""
Reusable widgets for the report viewer.
"""
from .row_list import RowListWidget
from .row_detail import RowDetailWidget

__all__ = [
    'RowListWidget',
    'RowDetailWidget',
]
