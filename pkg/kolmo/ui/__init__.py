"""
Terminal report viewer (Textual-based).
"""
