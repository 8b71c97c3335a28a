"""
Module: __init__.py
Description: hashseg package initialization and exports
"""
__version__ = "0.1.0"
