"""
Utility modules for kolmo.
"""
