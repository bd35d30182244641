"""Line-oriented result files: ``key value`` header lines, mode lines, then one label per line."""

from __future__ import annotations

import numpy as np

from .errors import ParseError

MAGIC = "# slkmodes result v1"


def write_result(path, result, config: dict, scores: dict | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(MAGIC + "\n")
        for key, value in config.items():
            fh.write(f"{key} {value}\n")
        fh.write(f"n {result.labels.size}\n")
        fh.write(f"sigma2 {result.sigma2!r}\n")
        fh.write(f"outer_iterations {result.outer_iterations}\n")
        fh.write(f"inner_iterations {result.inner_iterations}\n")
        fh.write(f"converged {str(result.converged).lower()}\n")
        fh.write(f"relaxed {result.relaxed!r}\n")
        fh.write(f"relaxed_unshifted {result.relaxed_unshifted!r}\n")
        fh.write(f"discrete {result.discrete!r}\n")
        for key, value in (scores or {}).items():
            fh.write(f"{key} {value!r}\n")
        for l, (idx, vec) in enumerate(zip(result.modes.indices, result.modes.vectors)):
            if idx >= 0:
                fh.write(f"mode {l} index {idx}\n")
            else:
                fh.write(f"mode {l} vector " + " ".join(repr(float(v)) for v in vec) + "\n")
        fh.write("labels\n")
        fh.write("\n".join(str(int(v)) for v in result.labels) + "\n")


def read_result(path) -> dict:
    """Parse a result file into a dict; ``labels`` is an int array and ``modes`` a list."""
    out: dict = {"modes": []}
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != MAGIC:
        raise ParseError(f"{path}:1: missing result header")
    for lineno, line in enumerate(lines[1:], start=2):
        if line == "labels":
            try:
                out["labels"] = np.array([int(v) for v in lines[lineno:] if v.strip()], dtype=np.int64)
            except ValueError as exc:
                raise ParseError(f"{path}: bad label line: {exc}") from None
            break
        key, _, rest = line.partition(" ")
        if key == "mode":
            l, kind, *vals = rest.split()
            out["modes"].append((int(l), kind, [float(v) for v in vals] if kind == "vector" else int(vals[0])))
        else:
            out[key] = rest
    if "labels" not in out:
        raise ParseError(f"{path}: no labels section")
    return out
