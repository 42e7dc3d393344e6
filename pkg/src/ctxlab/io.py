"""JSON reading and writing for models, states, observables and contexts."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .entropy import ProjectiveContext
from .model import EmpiricalModel, MeasurementScenario, ModelError, Semiring, context_key, enumerate_sections
from .quantum import (
    BooleanFunction,
    LocalObservable,
    QuantumState,
    balanced_state,
    basis_state,
    bell_state,
    dicke_state,
    empirical_model,
    ghz_state,
    named_function,
    observable_from_angles,
    pauli,
    product_state,
    random_state,
    w_state,
)


class InputError(ValueError):
    """Malformed JSON input."""


def load_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def parse_weight(value: Any) -> Fraction | float | bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"bad weight {value!r}") from exc
    raise InputError(f"bad weight {value!r}")


def format_weight(w: Fraction | float | bool) -> Any:
    if isinstance(w, Fraction):
        return str(w)
    if isinstance(w, (bool, np.bool_)):
        return bool(w)
    return float(w)


def model_from_json(obj: dict) -> EmpiricalModel:
    try:
        semiring = Semiring(obj.get("semiring", "probability"))
        cover = obj["cover"]
        scenario = MeasurementScenario(tuple(obj["measurements"]), tuple(obj.get("outcomes", ["+", "-"])),
                                       tuple(tuple(c) for c in cover))
        rows = {key: {sec: parse_weight(w) for sec, w in row.items()} for key, row in obj["rows"].items()}
        return EmpiricalModel.from_mapping(scenario, rows, semiring)
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed model JSON: {exc!r}") from exc
    except ModelError as exc:
        raise InputError(str(exc)) from exc


def model_to_json(model: EmpiricalModel) -> dict:
    sc = model.scenario
    rows = {}
    for ctx, row in zip(sc.cover, model.rows):
        secs = enumerate_sections(ctx, sc.outcomes)
        rows[context_key(ctx)] = {s: format_weight(w) for s, w in zip(secs, row)}
    return {"measurements": list(sc.measurements), "outcomes": list(sc.outcomes),
            "cover": [list(c) for c in sc.cover], "rows": rows, "semiring": model.semiring.value}


def _complex_list(values: Any) -> np.ndarray:
    out = []
    for v in values:
        if isinstance(v, (list, tuple)) and len(v) == 2:
            out.append(complex(float(v[0]), float(v[1])))
        elif isinstance(v, (int, float)):
            out.append(complex(v))
        else:
            raise InputError(f"bad complex entry {v!r}")
    return np.array(out, dtype=complex)


def _complex_pairs(values: np.ndarray) -> list[list[float]]:
    # adding 0.0 turns -0.0 into 0.0 so output is stable
    return [[float(z.real) + 0.0, float(z.imag) + 0.0] for z in np.asarray(values).reshape(-1)]


def state_from_json(obj: dict) -> QuantumState:
    try:
        if "amplitudes" in obj:
            amp = _complex_list(obj["amplitudes"])
            if "n" in obj and len(amp) != 2 ** int(obj["n"]):
                raise InputError("amplitude count does not match n")
            return QuantumState(amp)
        kind = obj["kind"].lower()
        if kind == "ghz":
            return ghz_state(int(obj.get("n", 3)), int(obj.get("sign", 1)))
        if kind == "dicke":
            return dicke_state(int(obj["n"]), int(obj["k"]))
        if kind == "w":
            return w_state()
        if kind == "bell":
            return bell_state(obj.get("which", "phi+"))
        if kind == "balanced":
            f = obj["function"]
            if isinstance(f, str):
                func = named_function(f, int(obj.get("arity", 2)))
            else:
                func = BooleanFunction.from_terms(int(obj["arity"]), f)
            return balanced_state(func)
        if kind == "basis":
            return basis_state(str(obj["bits"]))
        if kind == "product":
            return product_state([_complex_list(v) for v in obj["vectors"]])
        if kind == "random":
            return random_state(int(obj["n"]), np.random.default_rng(int(obj.get("seed", 1))))
        raise InputError(f"unknown state kind {kind!r}")
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed state JSON: {exc!r}") from exc
    except ModelError as exc:
        raise InputError(str(exc)) from exc


def state_to_json(state: QuantumState) -> dict:
    return {"n": state.n, "amplitudes": _complex_pairs(state.amplitudes)}


def observable_from_json(obj: dict) -> LocalObservable:
    try:
        if "pauli" in obj:
            return pauli(obj["pauli"])
        if "theta" in obj:
            return observable_from_angles(float(obj["theta"]), float(obj.get("phi", 0.0)), obj.get("label"))
        if "plus" in obj:
            return LocalObservable.from_plus(_complex_list(obj["plus"]), obj.get("label", "O"))
        raise InputError(f"cannot read observable {obj!r}")
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed observable JSON: {exc!r}") from exc
    except ModelError as exc:
        raise InputError(str(exc)) from exc


def observable_to_json(obs: LocalObservable) -> dict:
    return {"label": obs.label, "plus": _complex_pairs(obs.plus), "minus": _complex_pairs(obs.minus)}


def experiment_from_json(obj: dict) -> EmpiricalModel:
    """Model JSON, or ``{"state": ..., "menus": [[observable, ...], ...]}``."""
    if "rows" in obj:
        return model_from_json(obj)
    if "state" not in obj or "menus" not in obj:
        raise InputError("expected a model (rows) or a state with menus")
    state = state_from_json(obj["state"])
    menus = [[observable_from_json(o) for o in menu] for menu in obj["menus"]]
    try:
        return empirical_model(state, menus, obj.get("labels"))
    except ModelError as exc:
        raise InputError(str(exc)) from exc


def density_from_json(obj: dict) -> np.ndarray:
    """Density matrix from ``{"density": rows of [re, im]}`` or any pure-state JSON."""
    if "density" in obj:
        rows = [_complex_list(r) for r in obj["density"]]
        m = np.array(rows)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InputError("density matrix must be square")
        if np.max(np.abs(m - m.conj().T)) > 1e-9 or abs(np.trace(m).real - 1) > 1e-9:
            raise InputError("density matrix must be Hermitian with unit trace")
        return m
    return state_from_json(obj).density().matrix


def density_to_json(m: np.ndarray) -> list[list[list[float]]]:
    return [_complex_pairs(row) for row in np.asarray(m)]


def context_from_json(obj: dict, dim: int) -> ProjectiveContext:
    try:
        kind = obj.get("kind")
        if kind == "computational":
            return ProjectiveContext.computational(dim)
        if "basis" in obj:  # list of basis vectors
            vecs = np.column_stack([_complex_list(v) for v in obj["basis"]])
            return ProjectiveContext.from_basis(vecs)
        if "projections" in obj:
            return ProjectiveContext(tuple(np.array([_complex_list(r) for r in p]) for p in obj["projections"]))
        raise InputError(f"cannot read context {obj!r}")
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed context JSON: {exc!r}") from exc
    except ModelError as exc:
        raise InputError(str(exc)) from exc
