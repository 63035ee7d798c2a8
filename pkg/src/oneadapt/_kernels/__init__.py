"""Lattice search kernels: compiled extension with a pure-Python twin.

The compiled module is used when it imported cleanly and the env var
ONEADAPT_KERNEL is not set to "python". Both implementations produce
bit-identical dist/parent arrays, which the test suite asserts.
"""

import os

from .grid_bfs_py import bfs_grid as _bfs_py

BACKEND = "python"
bfs_grid = _bfs_py

if os.environ.get("ONEADAPT_KERNEL", "") != "python":
    try:
        from ._grid_bfs import bfs_grid as _bfs_c

        bfs_grid = _bfs_c
        BACKEND = "compiled"
    except ImportError:
        pass

__all__ = ["bfs_grid", "BACKEND"]
