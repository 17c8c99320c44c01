"""Run configuration files (YAML or JSON), validated before any computation."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import InputError
from .pauli import PauliHamiltonian, ising_hamiltonian, random_2local_chain
from .pipeline import ProtocolSpec


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TermRecord(_Strict):
    pauli: str
    coeff: float


class RandomSource(_Strict):
    kind: Literal["random"] = "random"
    seed: int = 0


class InlineSource(_Strict):
    kind: Literal["inline"]
    terms: list[TermRecord]


class IsingSource(_Strict):
    kind: Literal["ising"]
    h: float = 0.125
    J: float = 0.0625


HamiltonianSource = Annotated[Union[RandomSource, InlineSource, IsingSource], Field(discriminator="kind")]


class SweepConfig(_Strict):
    axis: Literal["copies", "kicks", "N"]
    grid: list[float] = Field(min_length=1)
    repeats: int = Field(10, ge=1)


class RunConfig(_Strict):
    n_qubits: int = Field(ge=2, le=14)
    T: float = Field(0.01, gt=0)
    r: int = Field(10, ge=1)
    shots: Optional[int] = Field(None, ge=1)
    mode: Literal["exact-kicked", "trotter-kicked", "exact-zeno-oracle"] = "exact-kicked"
    noise: float = Field(0.0, ge=0, lt=1)
    seed: int = 0
    elide_backkick: bool = False
    projection: Literal["iterative", "rank1"] = "iterative"
    epsilon: float = Field(0.1, gt=0, lt=1)
    delta: float = Field(0.01, gt=0, lt=1)
    xi: float = Field(0.5, gt=0)
    hamiltonian: HamiltonianSource = Field(default_factory=RandomSource)
    output_dir: Optional[str] = None
    sweep: Optional[SweepConfig] = None

    @model_validator(mode="after")
    def _check(self):
        if self.elide_backkick and self.r % 2:
            raise ValueError("elide_backkick requires even r")
        if isinstance(self.hamiltonian, InlineSource):
            for t in self.hamiltonian.terms:
                if len(t.pauli) != self.n_qubits:
                    raise ValueError(f"term {t.pauli!r} does not have {self.n_qubits} letters")
        return self

    def protocol_spec(self) -> ProtocolSpec:
        fields = self.model_dump(exclude={"hamiltonian", "output_dir", "sweep"})
        return ProtocolSpec(**fields)

    def build_hamiltonian(self, n_qubits: int | None = None) -> PauliHamiltonian:
        n = self.n_qubits if n_qubits is None else n_qubits
        src = self.hamiltonian
        if isinstance(src, RandomSource):
            return random_2local_chain(n, src.seed)
        if isinstance(src, IsingSource):
            return ising_hamiltonian(n, src.h, src.J)
        return PauliHamiltonian.from_records([t.model_dump() for t in src.terms], n)


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a config file; any problem becomes :class:`InputError`."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise InputError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise InputError("config must be a mapping")
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise InputError(f"invalid config: {exc}") from exc
