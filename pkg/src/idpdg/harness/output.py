"""Results record, CSV field dumps, legacy VTK and the configuration echo."""

from __future__ import annotations

import os

import numpy as np

from ..discretization import Discretization
from ..equations import Euler


def component_names(disc: Discretization) -> list[str]:
    if isinstance(disc.model, Euler):
        return ["rho"] + ["m_" + "xyz"[k] for k in range(disc.d)] + ["E"]
    return ["u"]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_fmt(a) for a in np.ravel(v))
    return str(v)


def format_record(record: dict) -> str:
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in record.items())


def parse_record(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        if "=" in line:
            k, v = (a.strip() for a in line.split("=", 1))
            out[k] = v
    return out


def _columns(disc: Discretization, u: np.ndarray):
    names = ["x", "y"][: disc.d] + component_names(disc)
    cols = [disc.x[:, k] for k in range(disc.d)] + [u[:, c] for c in range(disc.nc)]
    if isinstance(disc.model, Euler):
        names.append("p")
        cols.append(disc.model.pressure(u))
    return names, np.stack(cols, axis=1)


def write_csv(path: str, disc: Discretization, u: np.ndarray) -> None:
    names, data = _columns(disc, u)
    np.savetxt(path, data, delimiter=",", header=",".join(names), comments="", fmt="%.16e")


def structured_order(disc: Discretization) -> np.ndarray:
    """Permutation taking DG node order to a lexicographic (x fastest) node grid."""
    n = disc.n
    nx, ny = disc.mesh.nel
    gx = np.arange(nx * n)
    gy = np.arange(ny * n)
    GY, GX = np.meshgrid(gy, gx, indexing="ij")
    ex, i = GX // n, GX % n
    ey, j = GY // n, GY % n
    return ((ey * nx + ex) * disc.nloc + j * n + i).ravel()


def write_vtk(path: str, disc: Discretization, u: np.ndarray, title: str = "idpdg") -> None:
    """Legacy VTK STRUCTURED_GRID of the DG nodes (interface nodes are duplicated)."""
    if disc.d != 2:
        raise ValueError("VTK output is written for 2D fields only")
    order = structured_order(disc)
    nx, ny = (k * disc.n for k in disc.mesh.nel)
    names, data = _columns(disc, u)
    pts = np.zeros((len(order), 3))
    pts[:, :2] = disc.x[order]
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\nASCII\nDATASET STRUCTURED_GRID\n")
        fh.write(f"DIMENSIONS {nx} {ny} 1\nPOINTS {len(order)} double\n")
        np.savetxt(fh, pts, fmt="%.10e")
        fh.write(f"POINT_DATA {len(order)}\n")
        for name, col in zip(names[2:], data[:, 2:].T):
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            np.savetxt(fh, col[order], fmt="%.10e")


def write_outputs(out_dir: str, prefix: str, disc: Discretization, u: np.ndarray, record: dict, config_echo: str, csv=True, vtk=True) -> dict:
    """Write every artifact of a run and return the paths written."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    stem = os.path.join(out_dir, prefix + ("_" if prefix else ""))
    paths = {"results": stem + "results.txt", "config": stem + "config.txt"}
    with open(paths["results"], "w") as fh:
        fh.write(format_record(record))
    with open(paths["config"], "w") as fh:
        fh.write(config_echo)
    if csv:
        paths["csv"] = stem + "solution.csv"
        write_csv(paths["csv"], disc, u)
    if vtk and disc.d == 2:
        paths["vtk"] = stem + "solution.vtk"
        write_vtk(paths["vtk"], disc, u)
    return paths
