"""Scenario documents: versioned JSON describing a schedule, events and a prescription.

Complex numbers are ``[re, im]`` pairs. Documents are checked against the
bundled JSON schema first, then every matrix is checked for unitarity or
projector structure before anything is computed. Failures raise
:class:`ScenarioError` whose message starts with the offending field path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import lattice, wignerfriend
from .experience import CONDITION, EvolutionSchedule, ProjectorEvent
from .hilbert import STRUCT_TOL, CompositeSpace, pure_density, validate_projector_set, validate_unitary
from .prescriptions import JOINT, MINIMAL, PrescriptionSpec, evaluate
from .tables import ExpselError, ProbabilityTable

SCHEMA_VERSION = 1
ENGINES = ("operator", "pathsum")


class ScenarioError(ExpselError):
    """Document failed to parse or validate."""


class MissingAuxiliary(ExpselError):
    """Requested prescription needs auxiliary events the document lacks."""


@lru_cache(maxsize=1)
def schema() -> dict:
    text = resources.files("expsel").joinpath("data/scenario.schema.json").read_text()
    return json.loads(text)


def bundled_scenarios() -> dict[str, Path]:
    """Example documents shipped with the package, keyed by file stem."""
    root = resources.files("expsel").joinpath("data/scenarios")
    paths = sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".scenario"))
    return {p.stem: p for p in paths}


def _complex_array(data, field: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except ValueError:
        raise ScenarioError(f"{field}: ragged array") from None
    if arr.shape[-1:] != (2,):
        raise ScenarioError(f"{field}: complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _matrix(data, field: str, dim: int) -> np.ndarray:
    m = _complex_array(data, field)
    if m.shape != (dim, dim):
        raise ScenarioError(f"{field}: expected a {dim}x{dim} matrix, got shape {m.shape}")
    return m


def _require_wf_space(space: CompositeSpace, field: str) -> None:
    if space.factors != wignerfriend.SPACE.factors:
        raise ScenarioError(f"{field}: named gates and sets need space [[S,2],[F,2],[W,2]]")


@dataclass(frozen=True, eq=False)
class ScenarioDocument:
    raw: dict
    schedule: EvolutionSchedule
    condition: ProjectorEvent | None
    events: dict[str, ProjectorEvent]
    kind: str
    designated: str
    auxiliary: tuple[str, ...]
    outcomes: tuple[str, ...]

    def spec(self, kind: str | None = None) -> PrescriptionSpec:
        """Prescription for ``kind`` (default: the document's own).

        Auxiliary events listed in the document are ignored by ``minimal``.
        """
        kind = self.kind if kind is None else kind
        designated = self.events[self.designated]
        if kind == MINIMAL:
            return PrescriptionSpec(MINIMAL, designated)
        if not self.auxiliary:
            raise MissingAuxiliary(f"prescription {kind!r} needs auxiliary events; document lists none")
        aux = tuple(self.events[name] for name in self.auxiliary)
        if kind == JOINT:
            if len(self.outcomes) != len(aux):
                raise MissingAuxiliary("joint prescription needs prescription.outcomes, one per auxiliary event")
            return PrescriptionSpec(JOINT, designated, aux, self.outcomes)
        try:
            return PrescriptionSpec(kind, designated, aux)
        except ValueError as exc:
            raise MissingAuxiliary(f"prescription {kind!r}: {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, indent=2)


def _boundary(data, field: str, dim: int) -> np.ndarray | None:
    if data is None:
        return None
    if data == "identity":
        return np.eye(dim, dtype=np.complex128)
    if "pure" in data:
        v = _complex_array(data["pure"], f"{field}.pure")
        if v.shape != (dim,):
            raise ScenarioError(f"{field}.pure: expected {dim} amplitudes, got {v.shape[0]}")
        return pure_density(v)
    return _matrix(data["matrix"], f"{field}.matrix", dim)


def _step(k: int, data: dict, space: CompositeSpace, params: dict) -> tuple[int, int, np.ndarray]:
    field = f"steps[{k}]"
    dim = space.dim
    if "matrix" in data:
        u = _matrix(data["matrix"], f"{field}.matrix", dim)
    elif data["gate"] == "identity":
        u = np.eye(dim, dtype=np.complex128)
    else:
        _require_wf_space(space, f"{field}.gate")
        if data["gate"] == "controlled_copy":
            u = wignerfriend.controlled_copy()
        else:
            theta = data.get("theta", params.get("theta", 0.0))
            phi = data.get("phi", params.get("phi", 0.0))
            u = wignerfriend.build_V(theta, phi)
    if not validate_unitary(u, STRUCT_TOL):
        raise ScenarioError(f"{field}: step matrix is not unitary within {STRUCT_TOL:g}")
    return int(data["t_a"]), int(data["t_b"]), u


def _named_set(name: str, space: CompositeSpace, params: dict, field: str) -> dict[str, np.ndarray]:
    _require_wf_space(space, field)
    if name == "basis_W":
        projs = wignerfriend.w_projectors(params.get("theta", 0.0), params.get("phi", 0.0))
        return {str(j): p for j, p in projs.items()}
    if name == "basis_F":
        return {str(j): p for j, p in wignerfriend.friend_projectors().items()}
    return dict(wignerfriend.phi_test())


def _event(k: int, data: dict, space: CompositeSpace, params: dict) -> ProjectorEvent:
    field = f"events[{k}]"
    if "projectors" in data:
        projs = {}
        for m, item in enumerate(data["projectors"]):
            if item["label"] in projs:
                raise ScenarioError(f"{field}.projectors[{m}].label: duplicate label {item['label']!r}")
            projs[item["label"]] = _matrix(item["matrix"], f"{field}.projectors[{m}].matrix", space.dim)
    else:
        projs = _named_set(data["set"], space, params, f"{field}.set")
    if "select" in data:
        if data["select"] not in projs:
            raise ScenarioError(f"{field}.select: unknown label {data['select']!r}")
        projs = {data["select"]: projs[data["select"]]}
    if not validate_projector_set(list(projs.values()), STRUCT_TOL):
        raise ScenarioError(f"{field}: not an orthogonal projector set within {STRUCT_TOL:g}")
    try:
        return ProjectorEvent(int(data["time"]), data["kind"], tuple(projs.items()))
    except ValueError as exc:
        raise ScenarioError(f"{field}: {exc}") from None


def _field_path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<document>"


def parse(data: Any) -> ScenarioDocument:
    try:
        jsonschema.validate(data, schema())
    except jsonschema.ValidationError as exc:
        path = _field_path(exc.absolute_path)
        raise ScenarioError(f"{path}: {exc.message}") from None

    try:
        space = CompositeSpace(tuple(tuple(f) for f in data["space"]))
    except ValueError as exc:
        raise ScenarioError(f"space: {exc}") from None
    params = data.get("parameters", {})
    steps = [_step(k, s, space, params) for k, s in enumerate(data["steps"])]
    rho_i = _boundary(data["boundary"]["rho_I"], "boundary.rho_I", space.dim)
    rho_f = _boundary(data["boundary"].get("rho_F"), "boundary.rho_F", space.dim)
    try:
        schedule = EvolutionSchedule(space, tuple(steps), rho_i, rho_f)
    except ValueError as exc:
        raise ScenarioError(f"schedule: {exc}") from None

    events: dict[str, ProjectorEvent] = {}
    condition = None
    for k, ev_data in enumerate(data["events"]):
        name = ev_data["name"]
        if name in events:
            raise ScenarioError(f"events[{k}].name: duplicate event name {name!r}")
        ev = _event(k, ev_data, space, params)
        try:
            schedule.check_time(ev.time)
        except ValueError as exc:
            raise ScenarioError(f"events[{k}].time: {exc}") from None
        events[name] = ev
        if ev.kind == CONDITION:
            if condition is not None:
                raise ScenarioError(f"events[{k}]: at most one condition event is allowed")
            condition = ev

    pres = data["prescription"]
    designated = pres["designated"]
    if designated not in events or events[designated].kind == CONDITION:
        raise ScenarioError(f"prescription.designated: {designated!r} is not an experience event")
    aux = tuple(pres.get("auxiliary", ()))
    for m, name in enumerate(aux):
        if name not in events or events[name].kind == CONDITION:
            raise ScenarioError(f"prescription.auxiliary[{m}]: {name!r} is not an experience event")
    if condition is not None and condition.time > events[designated].time:
        raise ScenarioError("prescription.designated: experience precedes the condition")
    doc = ScenarioDocument(
        raw=data,
        schedule=schedule,
        condition=condition,
        events=events,
        kind=pres["kind"],
        designated=designated,
        auxiliary=aux,
        outcomes=tuple(pres.get("outcomes", ())),
    )
    try:
        doc.spec()
    except MissingAuxiliary as exc:
        raise ScenarioError(f"prescription: {exc}") from None
    except ValueError as exc:
        raise ScenarioError(f"prescription: {exc}") from None
    return doc


def load(path: str | Path) -> ScenarioDocument:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"<file>: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"<document>: invalid JSON: {exc}") from None
    return parse(data)


def run(doc: ScenarioDocument, engine: str = "operator", kind: str | None = None, **kwargs) -> ProbabilityTable:
    spec = doc.spec(kind)
    if engine == "operator":
        return evaluate(doc.schedule, doc.condition, spec)
    if engine == "pathsum":
        return lattice.pathsum_prescription(doc.schedule, doc.condition, spec, **kwargs)
    raise ValueError(f"unknown engine {engine!r}")
