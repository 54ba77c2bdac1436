"""
Oscillatory Operator Laboratory
"""

__version__ = "0.1.0"
