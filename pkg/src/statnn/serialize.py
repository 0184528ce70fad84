"""Model and scenario persistence.

A fitted network is stored as a single JSON document::

    {format_version, p, q, hidden_activation, output_activation,
     theta, lambda, column_meta, response_meta}

Floats are emitted with 17 significant digits so that loading recovers
bit-identical values, and the emitter walks dictionaries in a fixed
insertion order so repeated saves of the same model are byte-identical.
All writes go through a write-temp-then-rename step so a crash never
leaves a half-written file behind.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DataError
from .model import Architecture, ColumnMeta, Dataset, ParamVector
from .simgen import SimScenario

FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# Deterministic JSON emission
# ---------------------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    return format(float(x), ".17g")


def _emit(obj, indent: int) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_emit(v, indent + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{_emit(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if obj is None:
        return "null"
    raise TypeError(f"cannot serialize object of type {type(obj).__name__}")


def to_json_text(obj) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    return _emit(obj, 0) + "\n"


def atomic_write_text(path, text: str):
    """Write a text file via a temporary sibling and an atomic rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp.",
                               suffix="-" + os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


# ---------------------------------------------------------------------------
# Model documents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelDocument:
    """A fitted network plus everything needed to re-apply it to data."""

    arch: Architecture
    theta: ParamVector
    lam: float
    column_meta: tuple
    response_meta: ColumnMeta

    def __post_init__(self):
        if len(self.column_meta) != self.arch.p:
            raise DataError(
                f"model stores {len(self.column_meta)} column records for "
                f"p = {self.arch.p} covariates")

    @property
    def family(self) -> str:
        """Likelihood family implied by the output activation."""
        return ("bernoulli" if self.arch.output_activation == "logistic"
                else "gaussian")


def model_document(fit_result, data: Dataset) -> ModelDocument:
    """Bundle a fit with the dataset's preprocessing metadata."""
    return ModelDocument(arch=fit_result.arch, theta=fit_result.theta_hat,
                         lam=fit_result.lam,
                         column_meta=tuple(data.column_meta),
                         response_meta=data.response_meta)


def _meta_dict(meta: ColumnMeta) -> dict:
    return {"name": meta.name, "kind": meta.kind,
            "mean": meta.mean, "sd": meta.sd}


def model_to_json(doc: ModelDocument) -> str:
    payload = {
        "format_version": FORMAT_VERSION,
        "p": doc.arch.p,
        "q": doc.arch.q,
        "hidden_activation": doc.arch.hidden_activation,
        "output_activation": doc.arch.output_activation,
        "theta": [float(v) for v in doc.theta.values],
        "lambda": float(doc.lam),
        "column_meta": [_meta_dict(m) for m in doc.column_meta],
        "response_meta": _meta_dict(doc.response_meta),
    }
    return to_json_text(payload)


def save_model(doc: ModelDocument, path):
    atomic_write_text(path, model_to_json(doc))


def _require(payload: dict, key: str, where: str):
    if key not in payload:
        raise DataError(f"{where}: missing required field {key!r}")
    return payload[key]


def _parse_meta(entry, where: str) -> ColumnMeta:
    if not isinstance(entry, dict):
        raise DataError(f"{where}: column metadata must be an object")
    name = _require(entry, "name", where)
    kind = _require(entry, "kind", where)
    mean = _require(entry, "mean", where)
    sd = _require(entry, "sd", where)
    try:
        return ColumnMeta(name=str(name), kind=str(kind),
                          mean=float(mean), sd=float(sd))
    except (TypeError, ValueError) as exc:
        raise DataError(f"{where}: invalid column metadata: {exc}") from exc


def parse_model(text: str, where: str = "model") -> ModelDocument:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{where}: not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise DataError(f"{where}: top level must be an object")
    version = _require(payload, "format_version", where)
    if version != FORMAT_VERSION:
        raise DataError(
            f"{where}: unsupported format_version {version!r} "
            f"(this build reads version {FORMAT_VERSION})")
    try:
        arch = Architecture(
            p=int(_require(payload, "p", where)),
            q=int(_require(payload, "q", where)),
            hidden_activation=str(_require(payload, "hidden_activation",
                                           where)),
            output_activation=str(_require(payload, "output_activation",
                                           where)),
        )
    except ValueError as exc:
        raise DataError(f"{where}: invalid architecture: {exc}") from exc
    theta_raw = _require(payload, "theta", where)
    if not isinstance(theta_raw, list) or len(theta_raw) != arch.r:
        raise DataError(
            f"{where}: theta must be a list of {arch.r} numbers for "
            f"p = {arch.p}, q = {arch.q}")
    try:
        values = np.array([float(v) for v in theta_raw])
    except (TypeError, ValueError) as exc:
        raise DataError(f"{where}: theta entries must be numbers: "
                        f"{exc}") from exc
    theta = ParamVector(arch, values)
    if not np.all(np.isfinite(theta.values)):
        raise DataError(f"{where}: theta contains non-finite entries")
    try:
        lam = float(_require(payload, "lambda", where))
    except (TypeError, ValueError) as exc:
        raise DataError(f"{where}: lambda must be a number: {exc}") from exc
    if not (math.isfinite(lam) and lam >= 0.0):
        raise DataError(f"{where}: lambda must be a nonnegative number, "
                        f"got {lam!r}")
    meta_raw = _require(payload, "column_meta", where)
    if not isinstance(meta_raw, list):
        raise DataError(f"{where}: column_meta must be a list")
    column_meta = tuple(_parse_meta(m, where) for m in meta_raw)
    response_meta = _parse_meta(_require(payload, "response_meta", where),
                                where)
    return ModelDocument(arch=arch, theta=theta, lam=lam,
                         column_meta=column_meta,
                         response_meta=response_meta)


def load_model(path) -> ModelDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read(), where=os.fspath(path))


# ---------------------------------------------------------------------------
# Simulation scenarios
# ---------------------------------------------------------------------------

_SCENARIO_INT_FIELDS = ("q", "n", "p", "replicates", "restarts", "seed")
_SCENARIO_FLOAT_FIELDS = ("lambda", "noise_sd")


def scenario_to_json(scenario: SimScenario) -> str:
    payload = {
        "format_version": FORMAT_VERSION,
        "q": scenario.q,
        "nz_pattern": scenario.nz_pattern,
        "n": scenario.n,
        "p": scenario.p,
        "lambda": float(scenario.lam),
        "noise_sd": float(scenario.noise_sd),
        "replicates": scenario.replicates,
        "restarts": scenario.restarts,
        "seed": scenario.seed,
    }
    if scenario.true_theta is not None:
        payload["true_theta"] = [float(v)
                                 for v in scenario.true_theta.values]
    return to_json_text(payload)


def save_scenario(scenario: SimScenario, path):
    atomic_write_text(path, scenario_to_json(scenario))


def parse_scenario(text: str, where: str = "scenario") -> SimScenario:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{where}: not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise DataError(f"{where}: top level must be an object")
    version = _require(payload, "format_version", where)
    if version != FORMAT_VERSION:
        raise DataError(
            f"{where}: unsupported format_version {version!r} "
            f"(this build reads version {FORMAT_VERSION})")
    known = set(_SCENARIO_INT_FIELDS) | set(_SCENARIO_FLOAT_FIELDS) | {
        "format_version", "nz_pattern", "true_theta"}
    unknown = set(payload) - known
    if unknown:
        raise DataError(f"{where}: unknown fields {sorted(unknown)}")
    kwargs = {}
    for field in _SCENARIO_INT_FIELDS:
        if field in payload:
            kwargs[field] = int(payload[field])
    for field in _SCENARIO_FLOAT_FIELDS:
        if field in payload:
            key = "lam" if field == "lambda" else field
            kwargs[key] = float(payload[field])
    for field in ("q", "n", "nz_pattern"):
        if field not in payload:
            raise DataError(f"{where}: missing required field {field!r}")
    kwargs["nz_pattern"] = str(payload["nz_pattern"])
    try:
        scenario = SimScenario(**kwargs)
    except ValueError as exc:
        raise DataError(f"{where}: invalid scenario: {exc}") from exc
    if "true_theta" in payload:
        arch = Architecture(p=scenario.p, q=scenario.q)
        raw = payload["true_theta"]
        if not isinstance(raw, list) or len(raw) != arch.r:
            raise DataError(
                f"{where}: true_theta must be a list of {arch.r} numbers")
        theta = ParamVector(arch, np.array([float(v) for v in raw]))
        scenario = replace(scenario, true_theta=theta)
    return scenario


def load_scenario(path) -> SimScenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), where=os.fspath(path))
