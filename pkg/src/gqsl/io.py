"""Model and sweep specifications, density-trajectory ingestion, CSV output."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import jsonschema
import numpy as np

from .mixed import DensityTrajectory, validate_density

MODELS = ("gain_loss", "pt_symmetric", "bethe_lamb", "hermitian_matrix", "matrix", "tabulated")
CLOSED_FORM_MODELS = ("gain_loss", "pt_symmetric", "bethe_lamb")


class SpecError(ValueError):
    """Input file or flag failed validation."""


_number = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_positive = {"type": "number", "exclusiveMinimum": 0}
_real_list = {"type": "array", "items": _number, "minItems": 1}
_real_matrix = {"type": "array", "items": _real_list, "minItems": 1}
_complex_vector = {
    "type": "object",
    "properties": {"re": _real_list, "im": _real_list},
    "required": ["re"],
    "additionalProperties": False,
}
_complex_matrix = {
    "type": "object",
    "properties": {"re": _real_matrix, "im": _real_matrix},
    "required": ["re"],
    "additionalProperties": False,
}


def _params(props: dict) -> dict:
    return {"type": "object", "properties": props, "required": list(props), "additionalProperties": False}


PARAM_SCHEMAS = {
    "gain_loss": _params({"g": _nonneg, "gamma_L": _nonneg, "gamma_G": _nonneg}),
    "pt_symmetric": _params({"g": _nonneg, "gamma": _nonneg}),
    "bethe_lamb": _params({"gamma_1": _nonneg, "gamma_2": _nonneg, "Delta": _number, "Omega": _number}),
    "hermitian_matrix": _params({"H": _complex_matrix}),
    "matrix": _params({"H": _complex_matrix}),
    "tabulated": _params({"dt": _positive, "samples": {"type": "array", "items": _complex_vector, "minItems": 3}}),
}

MODEL_SCHEMA = {
    "type": "object",
    "properties": {
        "model": {"enum": list(MODELS)},
        "params": {"type": "object"},
        "hbar": _positive,
        "initial_state": _complex_vector,
        "grid": {
            "type": "object",
            "properties": {
                "t_max": _positive,
                "steps": {"type": "integer", "minimum": 2},
                "t_list": {"type": "array", "items": _positive, "minItems": 1},
            },
            "additionalProperties": False,
        },
    },
    "required": ["model", "params"],
    "additionalProperties": False,
}

DENSITY_SCHEMA = {
    "type": "object",
    "properties": {
        "dt": _positive,
        "hbar": _positive,
        "samples": {"type": "array", "items": _complex_matrix, "minItems": 3},
    },
    "required": ["dt", "samples"],
    "additionalProperties": False,
}


def _validate(instance: Any, schema: dict, where: str) -> None:
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(instance), key=lambda e: list(e.path))
    if errors:
        lines = []
        for e in errors:
            path = "/".join(str(p) for p in e.absolute_path) or "<root>"
            lines.append(f"{where}{path}: {e.message}")
        raise SpecError("\n".join(lines))


def _complex_array(obj: dict, what: str) -> np.ndarray:
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except ValueError as exc:
        raise SpecError(f"{what}: ragged or malformed array ({exc})") from exc
    if re.shape != im.shape:
        raise SpecError(f"{what}: 're' has shape {re.shape} but 'im' has shape {im.shape}")
    return re + 1j * im


def _encode(z: np.ndarray) -> dict:
    z = np.asarray(z, dtype=complex)
    return {"re": z.real.tolist(), "im": z.imag.tolist()}


def _load_json(path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path} is not valid JSON: {exc}") from exc


@dataclass
class ModelSpec:
    model: str
    params: dict
    hbar: float = 1.0
    initial_state: np.ndarray | None = None
    grid: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Any) -> "ModelSpec":
        _validate(data, MODEL_SCHEMA, "spec: ")
        model = data["model"]
        _validate(data["params"], PARAM_SCHEMAS[model], "spec: params/")
        grid = dict(data.get("grid", {}))
        if "t_list" in grid and ("t_max" in grid or "steps" in grid):
            raise SpecError("spec: grid: give either {t_max, steps} or {t_list}, not both")
        if "steps" in grid and "t_max" not in grid:
            raise SpecError("spec: grid: 'steps' needs 't_max'")
        if "t_list" in grid:
            _check_increasing(grid["t_list"], "spec: grid/t_list")
        psi0 = None
        if "initial_state" in data:
            psi0 = _complex_array(data["initial_state"], "spec: initial_state")
            if not np.linalg.norm(psi0) > 0:
                raise SpecError("spec: initial_state is the zero vector")
        spec = cls(model, dict(data["params"]), float(data.get("hbar", 1.0)), psi0, grid)
        spec._check_dims()
        return spec

    @classmethod
    def load(cls, path) -> "ModelSpec":
        return cls.from_dict(_load_json(path))

    def to_dict(self) -> dict:
        d: dict = {"model": self.model, "params": self.params, "hbar": self.hbar}
        if self.initial_state is not None:
            d["initial_state"] = _encode(self.initial_state)
        if self.grid:
            d["grid"] = self.grid
        return d

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModelSpec):
            return NotImplemented
        return json.dumps(self.to_dict(), sort_keys=True) == json.dumps(other.to_dict(), sort_keys=True)

    def _check_dims(self) -> None:
        dim = self.dim
        if self.model in ("hermitian_matrix", "matrix"):
            H = self.matrix()
            if H.ndim != 2 or H.shape[0] != H.shape[1]:
                raise SpecError(f"spec: params/H must be square, got shape {H.shape}")
            if self.model == "hermitian_matrix" and np.max(np.abs(H - H.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(H))):
                raise SpecError("spec: params/H is not Hermitian; use model 'matrix' for general generators")
        if self.model == "tabulated":
            if self.initial_state is not None:
                raise SpecError("spec: tabulated trajectories take no initial_state")
            if self.grid:
                raise SpecError("spec: tabulated trajectories take their grid from params/dt")
            states = self.tabulated_samples()
            if states.ndim != 2:
                raise SpecError("spec: params/samples must all have the same dimension")
        if self.initial_state is not None and self.initial_state.size != dim:
            raise SpecError(f"spec: initial_state has dimension {self.initial_state.size}, model has {dim}")

    @property
    def dim(self) -> int:
        if self.model in ("hermitian_matrix", "matrix"):
            return self.matrix().shape[0]
        if self.model == "tabulated":
            return len(self.params["samples"][0]["re"])
        return 2

    def matrix(self) -> np.ndarray:
        return _complex_array(self.params["H"], "spec: params/H")

    def tabulated_samples(self) -> np.ndarray:
        rows = [_complex_array(s, f"spec: params/samples/{k}") for k, s in enumerate(self.params["samples"])]
        if len({r.shape for r in rows}) != 1:
            raise SpecError("spec: params/samples must all have the same dimension")
        return np.array(rows)

    @property
    def uses_default_state(self) -> bool:
        if self.initial_state is None:
            return True
        u = self.initial_state / np.linalg.norm(self.initial_state)
        return bool(abs(abs(np.vdot(u, np.ones(2) / math.sqrt(2))) - 1.0) < 1e-12) if u.size == 2 else False


def _check_increasing(values: Sequence[float], where: str) -> None:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise SpecError(f"{where}: empty")
    if not np.all(v > 0):
        raise SpecError(f"{where}: values must be positive")
    if np.any(np.diff(v) <= 0):
        raise SpecError(f"{where}: values must be strictly increasing")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple[float, ...]

    def __post_init__(self):
        _check_increasing(self.values, f"sweep over {self.variable}")

    @classmethod
    def parse(cls, text: str, variable: str = "T") -> "SweepSpec":
        """``min:max:count`` or ``min:max:count:log``."""
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise SpecError(f"--sweep expects min:max:count[:log], got {text!r}")
        try:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise SpecError(f"--sweep: {exc}") from exc
        spacing = parts[3] if len(parts) == 4 else "linear"
        return cls.from_range(lo, hi, count, spacing, variable)

    @classmethod
    def from_range(cls, lo: float, hi: float, count: int, spacing: str = "linear", variable: str = "T") -> "SweepSpec":
        if count < 1:
            raise SpecError("sweep count must be >= 1")
        if not (lo > 0 and hi >= lo):
            raise SpecError(f"sweep range must satisfy 0 < min <= max, got {lo}..{hi}")
        if count == 1:
            if lo != hi:
                raise SpecError("a single-point sweep needs min == max")
            return cls(variable, (lo,))
        if spacing == "log":
            values = np.geomspace(lo, hi, count)
        elif spacing in ("linear", "lin"):
            values = np.linspace(lo, hi, count)
        else:
            raise SpecError(f"unknown sweep spacing {spacing!r}; use 'linear' or 'log'")
        return cls(variable, tuple(float(v) for v in values))


def load_density_trajectory(path) -> DensityTrajectory:
    """Read ``{dt, hbar, samples: [{re, im}, ...]}`` into a validated trajectory."""
    data = _load_json(path)
    _validate(data, DENSITY_SCHEMA, "density file: ")
    rhos = []
    for k, s in enumerate(data["samples"]):
        rho = _complex_array(s, f"density file: samples/{k}")
        try:
            rhos.append(validate_density(rho, k))
        except ValueError as exc:
            raise SpecError(f"density file: {exc}") from exc
    if len({r.shape for r in rhos}) != 1:
        raise SpecError("density file: samples must all have the same shape")
    return DensityTrajectory(np.array(rhos), float(data["dt"]), float(data.get("hbar", 1.0)))


def dump_density_trajectory(rhos: DensityTrajectory, path) -> None:
    payload = {"dt": rhos.dt, "hbar": rhos.hbar, "samples": [_encode(r) for r in rhos.samples]}
    Path(path).write_text(json.dumps(payload))


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])
