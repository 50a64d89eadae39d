"""Legacy ASCII VTK output."""
from __future__ import annotations

from pathlib import Path

import numpy as np


def write_vtk(path, vertices: np.ndarray, cells: np.ndarray, point_data=None, cell_data=None):
    """Unstructured triangle grid with scalar or 2-vector point/cell arrays."""
    path = Path(path)
    lines = ["# vtk DataFile Version 3.0", "alflow", "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {len(vertices)} double"]
    lines += [f"{x:.16e} {y:.16e} 0.0" for x, y in vertices]
    lines.append(f"CELLS {len(cells)} {4 * len(cells)}")
    lines += [f"3 {a} {b} {c}" for a, b, c in cells]
    lines.append(f"CELL_TYPES {len(cells)}")
    lines += ["5"] * len(cells)

    def block(kind, n, data):
        if not data:
            return
        lines.append(f"{kind} {n}")
        for name, arr in data.items():
            arr = np.asarray(arr, dtype=float)
            if len(arr) != n:
                raise ValueError(f"array {name!r} has length {len(arr)}, expected {n}")
            if arr.ndim == 1:
                lines.append(f"SCALARS {name} double 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(f"{v:.16e}" for v in arr)
            else:
                lines.append(f"VECTORS {name} double")
                lines.extend(f"{v[0]:.16e} {v[1]:.16e} 0.0" for v in arr)

    block("POINT_DATA", len(vertices), point_data)
    block("CELL_DATA", len(cells), cell_data)
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write VTK file {path}: {exc}") from exc
