"""On-disk format for systems and reduced models.

A system is a directory with a ``manifest.json`` naming the role of every
matrix file and the scalar frequency function attached to each term.  Dense
matrices and slice stacks are ``.npy`` files; sparse quadratic slices are
stored as one stacked (n^2 x n) CSR matrix in ``.npz``.  Reduced models add
the basis matrices and method metadata next to a nested system directory.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .interpolation import Condition, InterpolationPointSet, ReductionBasis
from .linalg import QuadraticOperator
from .projection import ConditionCheck, ReducedModel
from .system import (
    BivariateMatrixFunction,
    FrequencyFunction,
    MatrixFunction,
    StructuredQBSystem,
)

SCHEMA = "structured-qb-system/1"


def _save_matrix(mat, path: Path) -> str:
    if sp.issparse(mat):
        sp.save_npz(path.with_suffix(".npz"), sp.csr_matrix(mat))
        return path.with_suffix(".npz").name
    np.save(path.with_suffix(".npy"), np.asarray(mat))
    return path.with_suffix(".npy").name


def _load_matrix(dirpath: Path, name: str):
    if name.endswith(".npz"):
        return sp.load_npz(dirpath / name)
    return np.load(dirpath / name)


def _save_mf(mf: MatrixFunction, dirpath: Path, prefix: str) -> list:
    entries = []
    for i, (f, mat) in enumerate(mf.terms):
        fname = _save_matrix(mat, dirpath / f"{prefix}_{i}")
        entries.append({"function": f.to_tag(), "matrix": fname})
    return entries


def _load_mf(dirpath: Path, entries: list, rows: int, cols: int) -> MatrixFunction:
    terms = tuple(
        (FrequencyFunction.from_tag(e["function"]), _load_matrix(dirpath, e["matrix"]))
        for e in entries)
    return MatrixFunction(rows, cols, terms)


def _save_operator(op: QuadraticOperator, dirpath: Path, prefix: str) -> dict:
    if op.is_zero:
        return {"storage": "zero", "n": op.n}
    if op.is_sparse:
        stacked = sp.vstack([sp.csr_matrix(s) for s in op.slices()],
                            format="csr")
        fname = f"{prefix}_slices.npz"
        sp.save_npz(dirpath / fname, stacked)
        return {"storage": "sparse", "n": op.n, "file": fname}
    fname = f"{prefix}_slices.npy"
    np.save(dirpath / fname, op._tensor)
    return {"storage": "dense", "n": op.n, "file": fname}


def _load_operator(dirpath: Path, spec: dict) -> QuadraticOperator:
    n = int(spec["n"])
    if spec["storage"] == "zero":
        return QuadraticOperator.zeros(n)
    if spec["storage"] == "sparse":
        stacked = sp.load_npz(dirpath / spec["file"]).tocsr()
        slices = [stacked[j * n:(j + 1) * n, :] for j in range(n)]
        return QuadraticOperator(slices=slices)
    return QuadraticOperator(tensor=np.load(dirpath / spec["file"]))


def save_system(sys: StructuredQBSystem, dirpath) -> None:
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema": SCHEMA,
        "kind": sys.kind,
        "label": sys.label,
        "n": sys.n, "m": sys.m, "p": sys.p,
        "split_row": getattr(sys, "split_row", None),
        "C": _save_mf(sys.C, dirpath, "C"),
        "K": _save_mf(sys.K, dirpath, "K"),
        "B": _save_mf(sys.B, dirpath, "B"),
        "N": [_save_mf(nf, dirpath, f"N{j}") for j, nf in enumerate(sys.N)],
        "H": [
            {"g": g.to_tag(), "h": h.to_tag(),
             "operator": _save_operator(op, dirpath, f"H{i}")}
            for i, (g, h, op) in enumerate(sys.H.terms)
        ],
    }
    (dirpath / "manifest.json").write_text(json.dumps(manifest, indent=1))


def load_system(dirpath) -> StructuredQBSystem:
    dirpath = Path(dirpath)
    manifest = json.loads((dirpath / "manifest.json").read_text())
    if manifest.get("schema") != SCHEMA:
        raise ValueError(f"unrecognized manifest schema in {dirpath}")
    n, m, p = manifest["n"], manifest["m"], manifest["p"]
    h_terms = tuple(
        (FrequencyFunction.from_tag(e["g"]), FrequencyFunction.from_tag(e["h"]),
         _load_operator(dirpath, e["operator"]))
        for e in manifest["H"])
    sys = StructuredQBSystem(
        n=n, m=m, p=p,
        C=_load_mf(dirpath, manifest["C"], p, n),
        K=_load_mf(dirpath, manifest["K"], n, n),
        B=_load_mf(dirpath, manifest["B"], n, m),
        N=[_load_mf(dirpath, entries, n, n) for entries in manifest["N"]],
        H=BivariateMatrixFunction(n, h_terms),
        kind=manifest["kind"],
        label=manifest["label"],
    )
    sys.split_row = manifest.get("split_row")
    return sys


# ---------------------------------------------------------------------------
# reduced models
# ---------------------------------------------------------------------------

def _complex_list(values) -> list:
    return [[float(np.real(v)), float(np.imag(v))] for v in values]


def _from_complex_list(pairs) -> tuple:
    return tuple(complex(re, im) for re, im in pairs)


def save_reduced_model(model: ReducedModel, dirpath) -> None:
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    save_system(model.system, dirpath / "system")
    basis = model.basis
    np.savez(dirpath / "basis.npz", V=basis.V, W=basis.W)
    meta = {
        "method_tag": basis.method_tag,
        "parent_label": model.parent_label,
        "points": _complex_list(basis.points_used.points),
        "closure_policy": basis.points_used.closure_policy,
        "guaranteed_conditions": [
            {"kind": c.kind, "points": _complex_list(c.points)}
            for c in basis.guaranteed_conditions],
        "condition_checks": [
            {"kind": c.condition.kind,
             "points": _complex_list(c.condition.points),
             "relative_error": c.relative_error, "passed": c.passed}
            for c in model.condition_checks],
    }
    (dirpath / "meta.json").write_text(json.dumps(meta, indent=1))


def load_reduced_model(dirpath) -> ReducedModel:
    dirpath = Path(dirpath)
    meta = json.loads((dirpath / "meta.json").read_text())
    with np.load(dirpath / "basis.npz") as data:
        v, w = data["V"], data["W"]
    basis = ReductionBasis(
        V=v, W=w, method_tag=meta["method_tag"],
        points_used=InterpolationPointSet(
            _from_complex_list(meta["points"]),
            closure_policy=meta["closure_policy"]),
        guaranteed_conditions=[
            Condition(e["kind"], _from_complex_list(e["points"]))
            for e in meta["guaranteed_conditions"]],
    )
    model = ReducedModel(system=load_system(dirpath / "system"), basis=basis,
                         parent_label=meta["parent_label"])
    model.condition_checks = [
        ConditionCheck(Condition(e["kind"], _from_complex_list(e["points"])),
                       e["relative_error"], e["passed"])
        for e in meta["condition_checks"]]
    return model
