"""Device contract, registry and the execute pipeline."""
from __future__ import annotations

import abc
import threading
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from packaging.specifiers import InvalidSpecifier, SpecifierSet
from packaging.version import Version

from ..exceptions import (
    DeviceError,
    DuplicateShortName,
    IncompatibleApiVersion,
    InvalidDistribution,
    SampleRequiresShots,
    TooManyWires,
    UnknownDevice,
    UnsupportedObservable,
    UnsupportedOperation,
)
from ..ir import GateApplication, Measurement, MeasurementKind, Observable, QuantumTape

API_VERSION = "0.1.0"


@dataclass(frozen=True)
class DeviceDescriptor:
    name: str
    short_name: str
    api_version: str
    version: str
    author: str
    capabilities: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.short_name.count(".") != 1 or not all(self.short_name.split(".")):
            raise ValueError(f"short_name must look like 'plugin.device', got {self.short_name!r}")
        if "model" not in self.capabilities:
            raise ValueError("capabilities must include 'model'")
        object.__setattr__(self, "capabilities", MappingProxyType(dict(self.capabilities)))

    @property
    def model(self) -> str:
        return self.capabilities["model"]


@dataclass(frozen=True)
class DeviceConfig:
    wires: int
    shots: int = 0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.wires < 1:
            raise ValueError(f"wires must be positive, got {self.wires}")
        if self.shots < 0:
            raise ValueError(f"shots must be non-negative, got {self.shots}")


class Device(abc.ABC):
    """Base class for simulators and hardware backends.

    Subclasses declare the identifiers (``name``, ``short_name``,
    ``api_version``, ``version``, ``author``), the supported ``operations``
    and ``observables`` and a ``capabilities`` mapping with at least
    ``"model"``. :meth:`execute` drives the fixed evaluation pipeline.

    ``shots=0`` means exact statistics; with ``shots > 0`` all expectations
    and variances of one execution come from the same batch of samples.
    """

    name: str = ""
    short_name: str = ""
    api_version: str = API_VERSION
    version: str = "0.0.0"
    author: str = ""
    operations: frozenset = frozenset()
    observables: frozenset = frozenset()
    capabilities: Mapping = MappingProxyType({"model": "qubit"})

    def __init__(self, wires: int, shots: int = 0, seed=None):
        self.config = DeviceConfig(int(wires), int(shots), seed if isinstance(seed, int) else None)
        self._seed_seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        self.rng = np.random.default_rng(self._seed_seq)
        self.num_executions = 0
        self._samples = None
        self._circuit: Optional[QuantumTape] = None

    @classmethod
    def descriptor(cls) -> DeviceDescriptor:
        return DeviceDescriptor(
            cls.name, cls.short_name, cls.api_version, cls.version, cls.author, dict(cls.capabilities)
        )

    @property
    def num_wires(self) -> int:
        return self.config.wires

    @property
    def shots(self) -> int:
        return self.config.shots

    @property
    def analytic(self) -> bool:
        return self.config.shots == 0

    @property
    def model(self) -> str:
        return self.capabilities["model"]

    def clone(self) -> "Device":
        """Independent instance with the same configuration and a child RNG stream."""
        return type(self)(self.num_wires, self.shots, seed=self._seed_seq.spawn(1)[0])

    # pipeline -------------------------------------------------------------------

    def check_validity(self, tape: QuantumTape):
        for g in tape.operations:
            if g.name not in self.operations:
                raise UnsupportedOperation(g.name)
        for m in tape.measurements:
            for name in m.obs.names:
                if name not in self.observables:
                    raise UnsupportedObservable(name)
        if tape.num_wires > self.num_wires:
            raise TooManyWires(
                f"circuit uses {tape.num_wires} wires, device {self.short_name} has {self.num_wires}"
            )
        if tape.is_sampled and self.analytic:
            raise SampleRequiresShots("sample() needs a device with shots > 0")

    def execute(self, tape: QuantumTape):
        """Run one circuit evaluation and return one entry per measurement."""
        self.check_validity(tape)
        self.reset()
        self._circuit = tape
        self.apply(tape.operations, rotations=tape.diagonalizing_gates)
        self._samples = None
        if not self.analytic or tape.is_sampled:
            self._samples = self.generate_samples()
        results = self.statistics(tape.measurements)
        self.num_executions += 1
        return _asarray(results)

    def statistics(self, measurements: Sequence[Measurement]) -> list:
        out = []
        for m in measurements:
            if m.kind is MeasurementKind.EXPECTATION:
                out.append(self.expval(m.obs))
            elif m.kind is MeasurementKind.VARIANCE:
                out.append(self.var(m.obs))
            else:
                if self.analytic:
                    raise SampleRequiresShots("sample() needs a device with shots > 0")
                out.append(self.sample(m.obs))
        return out

    # backend hooks -------------------------------------------------------------------

    @abc.abstractmethod
    def reset(self):
        """Return to the ground / vacuum state."""

    @abc.abstractmethod
    def apply(self, operations: Sequence[GateApplication], rotations: Sequence[GateApplication] = ()):
        ...

    @abc.abstractmethod
    def generate_samples(self):
        ...

    @abc.abstractmethod
    def expval(self, obs: Observable) -> float:
        ...

    @abc.abstractmethod
    def var(self, obs: Observable) -> float:
        ...

    @abc.abstractmethod
    def sample(self, obs: Observable) -> np.ndarray:
        ...

    def __repr__(self):
        return f"<{type(self).__name__} {self.short_name} wires={self.num_wires} shots={self.shots}>"


def _asarray(results):
    if all(np.ndim(r) == 0 for r in results):
        return np.array(results, dtype=float)
    try:
        return np.array(results, dtype=float)
    except ValueError:
        arr = np.empty(len(results), dtype=object)
        arr[:] = results
        return arr


def sample_basis_states(probs, shots: int, rng) -> np.ndarray:
    """Draw ``shots`` i.i.d. basis-state indices from ``probs``.

    ``rng`` is a seed or a :class:`numpy.random.Generator`.
    """
    probs = np.asarray(probs, dtype=float)
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if probs.ndim != 1 or np.any(probs < -1e-12) or abs(probs.sum() - 1) > 1e-9:
        raise InvalidDistribution("probabilities must be non-negative and sum to 1")
    probs = np.clip(probs, 0, None)
    probs = probs / probs.sum()
    rng = np.random.default_rng(rng)
    return rng.choice(len(probs), size=shots, p=probs)


class QubitDevice(Device):
    """Qubit device deriving all statistics from :meth:`probability`.

    Subclasses implement ``reset``, ``apply`` and ``probability``.
    """

    capabilities = MappingProxyType({"model": "qubit"})

    @abc.abstractmethod
    def probability(self, wires: Sequence[int]) -> np.ndarray:
        """Marginal probabilities on ``wires`` (in the given order) after the last apply."""

    def generate_samples(self) -> np.ndarray:
        n = self.num_wires
        idx = sample_basis_states(self.probability(range(n)), self.shots, self.rng)
        # wire 0 is the most significant bit
        return (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1

    def _sample_indices(self, wires) -> np.ndarray:
        bits = self._samples[:, list(wires)]
        weights = 1 << np.arange(len(wires) - 1, -1, -1)
        return bits @ weights

    def sample(self, obs):
        return obs.eigvals[self._sample_indices(obs.wires)]

    def expval(self, obs):
        if self.analytic:
            return float(self.probability(obs.wires) @ obs.eigvals)
        return float(np.mean(self.sample(obs)))

    def var(self, obs):
        if self.analytic:
            ev = obs.eigvals
            p = self.probability(obs.wires)
            return float(p @ ev**2 - (p @ ev) ** 2)
        return float(np.var(self.sample(obs)))


# registry -------------------------------------------------------------------

_registry: dict[str, tuple[DeviceDescriptor, Callable[..., Device]]] = {}
_registry_lock = threading.Lock()


def register_device(factory, descriptor: Optional[DeviceDescriptor] = None) -> DeviceDescriptor:
    """Make a device loadable by its short name.

    ``factory(wires, shots, seed=...)`` builds instances. For a
    :class:`Device` subclass the descriptor is read from its class
    attributes.
    """
    if descriptor is None:
        descriptor = factory.descriptor()
    with _registry_lock:
        if descriptor.short_name in _registry:
            raise DuplicateShortName(f"device {descriptor.short_name!r} is already registered")
        _registry[descriptor.short_name] = (descriptor, factory)
    return descriptor


def unregister_device(short_name: str):
    with _registry_lock:
        _registry.pop(short_name, None)


def list_devices() -> list[DeviceDescriptor]:
    return sorted((d for d, _ in _registry.values()), key=lambda d: d.short_name)


def api_compatible(required: str, current: str = API_VERSION) -> bool:
    """Whether a device requiring ``required`` runs under library ``current``.

    A specifier set (``">=0.1,<0.3"``) is checked literally; a bare version
    is a caret range: same major version (same minor while major is 0) and
    not newer than ``current``.
    """
    cur = Version(current)
    try:
        return cur in SpecifierSet(required)
    except InvalidSpecifier:
        pass
    req = Version(required)
    if req > cur or req.major != cur.major:
        return False
    return cur.major > 0 or req.minor == cur.minor


def load_device(short_name: str, wires: int, shots: int = 0, seed=None) -> Device:
    """Construct a fresh device instance by short name."""
    try:
        descriptor, factory = _registry[short_name]
    except KeyError:
        raise UnknownDevice(
            f"no device named {short_name!r}; available: {', '.join(sorted(_registry))}"
        ) from None
    if not api_compatible(descriptor.api_version):
        raise IncompatibleApiVersion(
            f"{short_name} requires API {descriptor.api_version}, this is {API_VERSION}"
        )
    if wires < 1:
        raise DeviceError(f"wires must be >= 1, got {wires}")
    return factory(wires, shots, seed=seed)


device = load_device
