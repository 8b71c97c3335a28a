"""Command-line interface (typer app in app.py)"""
