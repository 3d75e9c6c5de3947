"""Emission of self-contained gnuplot scripts for snapshot figures."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class Snapshot:
    """Cell averages at one time.

    Attributes
    ----------
    t : float
    x : ndarray
        Cell centres.
    A, Q : ndarray
        Cell averages.
    """

    t: float
    x: np.ndarray
    A: np.ndarray
    Q: np.ndarray


def _write_columns(path, header, cols):
    data = np.column_stack(cols)
    with open(path, "w") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for row in data:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def emit_plots(snapshots: Sequence[Snapshot], out_dir, name, *, equilibrium: Optional[np.ndarray] = None,
               exact: Optional[Sequence[Snapshot]] = None):
    """Write gnuplot data and script files for a list of snapshots.

    Parameters
    ----------
    snapshots : sequence of Snapshot
        Numerical snapshots; an empty sequence writes nothing.
    out_dir : path-like
    name : str
        File stem.
    equilibrium : ndarray, optional
        Background cell averages of ``A``.  When given, one panel per
        snapshot shows ``A - A_eq``.
    exact : sequence of Snapshot, optional
        Exact cell averages at the same times, overlaid on ``A`` and ``Q``
        panels.

    Returns
    -------
    list of Path
        All files written, the script last.
    """
    if not snapshots:
        return []
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    lines = ["set terminal pngcairo size 1200,400", f"set output '{name}.png'", "set key top left",
             "set xlabel 'x'"]
    if equilibrium is not None:
        eq = np.asarray(equilibrium, dtype=float)
        lines.append(f"set multiplot layout 1,{len(snapshots)}")
        for k, s in enumerate(snapshots):
            dat = out / f"{name}_dA_{k}.dat"
            _write_columns(dat, ("x", "A-A_eq"), (s.x, s.A - eq))
            files.append(dat)
            lines += [f"set title 't = {s.t:g}'", "set ylabel 'A - A_eq'",
                      f"plot '{dat.name}' using 1:2 with linespoints pt 7 ps 0.5 title 'numerical'"]
        lines.append("unset multiplot")
    else:
        lines.append(f"set multiplot layout {len(snapshots)},2")
        exact = list(exact or [])
        for k, s in enumerate(snapshots):
            dat = out / f"{name}_{k}.dat"
            _write_columns(dat, ("x", "A", "Q"), (s.x, s.A, s.Q))
            files.append(dat)
            ex = None
            if k < len(exact):
                ex = out / f"{name}_exact_{k}.dat"
                _write_columns(ex, ("x", "A", "Q"), (exact[k].x, exact[k].A, exact[k].Q))
                files.append(ex)
            for col, label in ((2, "A"), (3, "Q")):
                cmd = f"plot '{dat.name}' using 1:{col} with linespoints pt 7 ps 0.5 title 'numerical'"
                if ex is not None:
                    cmd += f", '{ex.name}' using 1:{col} with lines lw 2 title 'exact'"
                lines += [f"set title '{label}, t = {s.t:g}'", f"set ylabel '{label}'", cmd]
        lines.append("unset multiplot")
    script = out / f"{name}.gp"
    script.write_text("\n".join(lines) + "\n")
    files.append(script)
    return files
