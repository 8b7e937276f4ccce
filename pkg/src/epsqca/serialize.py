"""JSON-shaped serialization: complex entries as ``[re, im]``, matrices row-major."""
from __future__ import annotations

import json

import numpy as np

from .errors import InputError
from .mpo import MpoOperator
from .patch import PatchResult
from .qca import LayeredCircuit
from .spinchain import DenseOperator, LocalTerm, SpinChainHamiltonian


def matrix_to_list(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_list(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise InputError(f"expected a matrix of [re, im] pairs, got array of shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def hamiltonian_to_dict(h: SpinChainHamiltonian) -> dict:
    return {"n": h.n, "terms": [{"site": t.site, "matrix": matrix_to_list(t.matrix)} for t in h.terms]}


def hamiltonian_from_dict(d: dict) -> SpinChainHamiltonian:
    try:
        terms = sorted(d["terms"], key=lambda t: t["site"])
        return SpinChainHamiltonian(int(d["n"]), tuple(LocalTerm(int(t["site"]), matrix_from_list(t["matrix"])) for t in terms))
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed Hamiltonian document: {exc}") from exc


def dense_to_dict(op: DenseOperator) -> dict:
    return {"support": list(op.support), "matrix": matrix_to_list(op.matrix)}


def dense_from_dict(d: dict) -> DenseOperator:
    return DenseOperator(tuple(d["support"]), matrix_from_list(d["matrix"]))


def patch_to_dict(p: PatchResult) -> dict:
    return {
        "window": list(p.window),
        "cut": p.cut,
        "chain": list(p.chain),
        "t": p.t,
        "integrator_steps": p.integrator_steps,
        "error_exact": p.error_exact,
        "error_bound": p.error_bound,
        "bound_method": p.bound_method,
        "v_matrix": matrix_to_list(p.v_windowed.matrix),
    }


def patch_from_dict(d: dict) -> PatchResult:
    window = tuple(d["window"])
    return PatchResult(
        v_windowed=DenseOperator(window, matrix_from_list(d["v_matrix"])),
        window=window,
        cut=int(d.get("cut", window[0] + 1)),
        chain=tuple(d.get("chain", window)),
        t=float(d["t"]),
        integrator_steps=int(d["integrator_steps"]),
        error_exact=None if d["error_exact"] is None else float(d["error_exact"]),
        error_bound=float(d["error_bound"]),
        bound_method=d.get("bound_method", "unknown"),
    )


def circuit_to_dict(c: LayeredCircuit) -> dict:
    return {
        "n": c.n,
        "t": c.t,
        "block_size": c.block_size,
        "u_layer": [{"block": list(b), "matrix": matrix_to_list(g.matrix)} for b, g in c.u_layer],
        "v_layer": [{"block": list(b), "matrix": matrix_to_list(g.matrix)} for b, g in c.v_layer],
        "per_cut_errors": list(c.per_cut_errors),
        "cuts": list(c.cuts),
    }


def circuit_from_dict(d: dict) -> LayeredCircuit:
    def layer(items):
        return tuple((tuple(g["block"]), DenseOperator(tuple(g["block"]), matrix_from_list(g["matrix"]))) for g in items)

    return LayeredCircuit(
        n=int(d["n"]),
        t=float(d["t"]),
        block_size=int(d["block_size"]),
        u_layer=layer(d["u_layer"]),
        v_layer=layer(d["v_layer"]),
        per_cut_errors=tuple(float(e) for e in d["per_cut_errors"]),
        cuts=tuple(d.get("cuts", ())),
    )


def mpo_to_dict(m: MpoOperator) -> dict:
    return {
        "n": m.n,
        "truncation_error": m.truncation_error,
        "tensors": [{f"alpha_{a}": matrix_to_list(t[a]) for a in range(4)} for t in m.tensors],
    }


def mpo_from_dict(d: dict) -> MpoOperator:
    tensors = []
    for j, site in enumerate(d["tensors"]):
        mats = []
        for a in range(4):
            arr = np.asarray(site[f"alpha_{a}"], dtype=float)
            # empty auxiliary dimensions cannot be represented as nested lists
            if arr.ndim != 3:
                raise InputError(f"site {j}, alpha_{a}: malformed matrix")
            mats.append(arr[..., 0] + 1j * arr[..., 1])
        shapes = {m.shape for m in mats}
        if len(shapes) != 1:
            raise InputError(f"site {j}: the four alpha matrices differ in shape {sorted(shapes)}")
        tensors.append(np.stack(mats))
    m = MpoOperator(tuple(tensors), float(d.get("truncation_error", 0.0)))
    if "n" in d and int(d["n"]) != m.n:
        raise InputError(f"declared n={d['n']} but found {m.n} site tensors")
    return m


def dumps(d: dict) -> str:
    return json.dumps(d, indent=1)


def loads(text: str) -> dict:
    return json.loads(text)
