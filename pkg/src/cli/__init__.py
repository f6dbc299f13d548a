"""
命令行包
"""

from .commands import cli, main

__all__ = ["cli", "main"]
