"""Dataset bundle formats: dense CSV panels, edge lists, truth files, and a
JSON manifest.

Formats
-------
y.csv            header ``t,i,j,value``; t in 0..T, 0-based i, j, dense.
x.csv            header ``t,i,k,value``; t in 1..T, k in 0..p1-1.
z.csv            header ``t,j,k,value``; t in 1..T, k in 0..p2-1.
row_network.csv  edge list ``src,dst`` (normalization happens at load time).
col_network.csv  edge list ``src,dst``.
truth.json       true labels, parameters, noise sd (simulated bundles only).
manifest.json    dimensions, seed, config, library version, config hash.

Values are serialized with 17 significant digits for exact float round-trip.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from . import __version__
from .model import GroupAssignment, MatrixSeries, NetworkPair, ParameterSet
from .netgen import read_edge_list, write_edge_list

__all__ = ["DatasetBundle", "write_bundle", "read_bundle"]

FMT = "%.17g"


class DimensionMismatchError(ValueError):
    """File contents disagree with the manifest dimensions."""


@dataclass
class DatasetBundle:
    root: str
    manifest: dict

    @property
    def N1(self):
        return self.manifest["N1"]

    @property
    def N2(self):
        return self.manifest["N2"]

    @property
    def T(self):
        return self.manifest["T"]


def _read_panel(path, shape, t_offset):
    arr = np.full(shape, np.nan)
    with open(path, newline="") as f:
        r = csv.reader(f)
        next(r)
        for row in r:
            t = int(row[0]) - t_offset
            idx = (t,) + tuple(int(v) for v in row[1:-1])
            try:
                arr[idx] = float(row[-1])
            except IndexError as exc:
                raise DimensionMismatchError(
                    f"{path}: index {row[:-1]} out of range for {shape}"
                ) from exc
    if np.any(np.isnan(arr)):
        raise DimensionMismatchError(f"{path}: missing entries for {shape}")
    return arr


def write_bundle(out_dir, data: MatrixSeries, nets: NetworkPair,
                 truth: dict | None = None, config: dict | None = None,
                 seed: int | None = None) -> DatasetBundle:
    os.makedirs(out_dir, exist_ok=True)
    T, N1, N2 = data.T, data.N1, data.N2

    yarr = np.asarray(data.Y)
    with open(os.path.join(out_dir, "y.csv"), "w", newline="") as f:
        f.write("t,i,j,value\n")
        for t in range(T + 1):
            for i in range(N1):
                row = yarr[t, i]
                for j in range(N2):
                    f.write(f"{t},{i},{j}," + FMT % row[j] + "\n")
    files = {"y": "y.csv"}
    if data.p1:
        _write_panel_cov(os.path.join(out_dir, "x.csv"), "t,i,k,value",
                         data.X)
        files["x"] = "x.csv"
    if data.p2:
        _write_panel_cov(os.path.join(out_dir, "z.csv"), "t,j,k,value",
                         data.Z)
        files["z"] = "z.csv"
    write_edge_list(os.path.join(out_dir, "row_network.csv"), nets.A1)
    write_edge_list(os.path.join(out_dir, "col_network.csv"), nets.A2)
    files["row_network"] = "row_network.csv"
    files["col_network"] = "col_network.csv"

    if truth is not None:
        with open(os.path.join(out_dir, "truth.json"), "w") as f:
            json.dump(truth, f, indent=2, sort_keys=True)
        files["truth"] = "truth.json"

    config = config or {}
    cfg_hash = hashlib.sha256(
        json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]
    manifest = {
        "N1": N1, "N2": N2, "T": T, "p1": data.p1, "p2": data.p2,
        "seed": seed, "config": config, "config_hash": cfg_hash,
        "version": __version__, "files": files,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return DatasetBundle(root=out_dir, manifest=manifest)


def _write_panel_cov(path, header, arr):
    steps, n, p = arr.shape
    with open(path, "w", newline="") as f:
        f.write(header + "\n")
        for t in range(steps):
            for i in range(n):
                row = arr[t, i]
                for k in range(p):
                    f.write(f"{t + 1},{i},{k}," + FMT % row[k] + "\n")


def read_bundle(root) -> tuple[DatasetBundle, MatrixSeries, NetworkPair,
                               dict | None]:
    """Load a bundle; returns (bundle, data, networks, truth-or-None)."""
    mpath = os.path.join(root, "manifest.json")
    with open(mpath) as f:
        manifest = json.load(f)
    for rel in manifest["files"].values():
        if not os.path.exists(os.path.join(root, rel)):
            raise FileNotFoundError(os.path.join(root, rel))
    N1, N2, T = manifest["N1"], manifest["N2"], manifest["T"]
    p1, p2 = manifest["p1"], manifest["p2"]
    Y = _read_panel(os.path.join(root, manifest["files"]["y"]),
                    (T + 1, N1, N2), 0)
    X = (_read_panel(os.path.join(root, manifest["files"]["x"]),
                     (T, N1, p1), 1) if p1 else np.zeros((T, N1, 0)))
    Z = (_read_panel(os.path.join(root, manifest["files"]["z"]),
                     (T, N2, p2), 1) if p2 else np.zeros((T, N2, 0)))
    try:
        A1 = read_edge_list(os.path.join(root, manifest["files"]["row_network"]),
                            N1)
        A2 = read_edge_list(os.path.join(root, manifest["files"]["col_network"]),
                            N2)
    except ValueError as exc:
        raise DimensionMismatchError(str(exc)) from exc
    data = MatrixSeries(Y=Y, X=X, Z=Z)
    nets = NetworkPair(A1=A1, A2=A2)
    truth = None
    if "truth" in manifest["files"]:
        with open(os.path.join(root, manifest["files"]["truth"])) as f:
            truth = json.load(f)
    bundle = DatasetBundle(root=root, manifest=manifest)
    return bundle, data, nets, truth


def truth_dict(assign: GroupAssignment, params: ParameterSet,
               noise_sd: float) -> dict:
    return {
        "G": assign.G, "H": assign.H,
        "g": assign.g.tolist(), "h": assign.h.tolist(),
        "params": {
            "lam": params.lam.tolist(), "gamma": params.gamma.tolist(),
            "alpha": params.alpha.tolist(), "zeta": params.zeta.tolist(),
            "delta": params.delta.tolist(),
        },
        "noise_sd": noise_sd,
    }


def truth_objects(truth: dict) -> tuple[GroupAssignment, ParameterSet]:
    p = truth["params"]
    params = ParameterSet(lam=p["lam"], gamma=p["gamma"], alpha=p["alpha"],
                          zeta=p["zeta"], delta=p["delta"])
    assign = GroupAssignment(G=truth["G"], H=truth["H"],
                             g=truth["g"], h=truth["h"])
    return assign, params
