"""Command-line demos emitting optimization traces.

::

    qhybrid devices
    qhybrid run qubit-rotation [--steps 100 --lr 0.4]
    qhybrid run vqe --hamiltonian h.txt
    qhybrid run classifier --data points.csv

Traces are written as CSV (a ``# config:`` comment line carrying the run
configuration as JSON, then a header row and data rows) or as one JSON
object with ``config``, ``meta``, ``columns`` and ``rows``. Exit status is 0
on success, 1 for invalid input and 2 for failures during the run.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .autodiff import mean
from .collections import Hamiltonian, VQECost, load_hamiltonian
from .devices import list_devices, load_device
from .exceptions import IncompatibleApiVersion, ParseError, QHybridError, UnknownDevice
from .ir import expval
from .ops.qubit import RX, RY, PauliZ
from .optimize import OPTIMIZERS, make_optimizer
from .qnode import QNode
from .templates import AngleEmbedding, StronglyEntanglingLayers, strong_ent_layers_uniform

#: dense diagonalization is only attempted up to this many wires
ORACLE_MAX_WIRES = 10
MAX_FEATURES = 4


class ConfigError(QHybridError, ValueError):
    """Invalid command-line configuration or input data."""


@dataclass
class RunConfig:
    demo: str
    device: str = "default.qubit"
    shots: int = 0
    seed: int = 0
    steps: int = 100
    lr: float = 0.4
    optimizer: str = "gd"
    out: Optional[str] = None
    format: str = "csv"
    input: Optional[str] = None
    layers: int = 2

    def validate(self):
        if self.steps < 1:
            raise ConfigError(f"--steps must be >= 1, got {self.steps}")
        if self.shots < 0:
            raise ConfigError(f"--shots must be >= 0, got {self.shots}")
        if not self.lr > 0:
            raise ConfigError(f"--lr must be positive, got {self.lr}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"--format must be csv or json, got {self.format!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"--optimizer must be one of {', '.join(OPTIMIZERS)}")
        if self.layers < 1:
            raise ConfigError(f"--layers must be >= 1, got {self.layers}")


@dataclass
class Trace:
    config: dict
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(self.config, sort_keys=True) + "\n")
        buf.write("# meta: " + json.dumps(self.meta, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([repr(v) for v in row])
        return buf.getvalue()

    def emit(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_csv()

    @classmethod
    def parse(cls, text: str, fmt: str) -> "Trace":
        if fmt == "json":
            d = json.loads(text)
            return cls(d["config"], d["columns"], [list(r) for r in d["rows"]], d.get("meta", {}))
        lines = text.splitlines()
        config = json.loads(lines[0].removeprefix("# config: "))
        meta = json.loads(lines[1].removeprefix("# meta: "))
        reader = csv.reader(lines[2:])
        columns = next(reader)
        rows = [[_num(v) for v in r] for r in reader]
        return cls(config, columns, rows, meta)


def _num(s: str):
    v = float(s)
    return int(v) if s.lstrip("-").isdigit() else v


def _device(cfg: RunConfig, wires: int, model: str = "qubit"):
    dev = load_device(cfg.device, wires, shots=cfg.shots, seed=cfg.seed)
    if dev.model != model:
        raise ConfigError(f"this demo needs a {model} device, {cfg.device} is {dev.model}")
    return dev


def _optimize(cfg: RunConfig, cost, params, row_fn):
    opt = make_optimizer(cfg.optimizer, cfg.lr)
    rows = []
    for step in range(cfg.steps):
        new, value = opt.step_and_cost(cost, params)
        rows.append(row_fn(step, params, value))
        params = new
    rows.append(row_fn(cfg.steps, params, float(np.asarray(cost(params)))))
    return params, rows


# demos -------------------------------------------------------------------

def run_qubit_rotation(cfg: RunConfig) -> Trace:
    """Flip a qubit by optimizing two rotation angles, starting from (0.011, 0.012)."""
    dev = _device(cfg, 1)

    def circuit1(params):
        RX(params[0], wires=0)
        RY(params[1], wires=0)
        return expval(PauliZ(0))

    q = QNode(circuit1, dev)
    params = np.array([0.011, 0.012])
    _, rows = _optimize(cfg, q, params, lambda t, p, c: [t, float(p[0]), float(p[1]), float(c)])
    return Trace(asdict(cfg), ["step", "phi1", "phi2", "cost"], rows, {"final_cost": rows[-1][-1]})


def _vqe_ansatz(weights, wires):
    StronglyEntanglingLayers(weights, wires=wires)


def run_vqe(cfg: RunConfig, h: Optional[Hamiltonian] = None) -> Trace:
    """Minimize a Pauli Hamiltonian with a strongly entangling ansatz."""
    if h is None:
        if cfg.input is None:
            raise ConfigError("run vqe needs --hamiltonian FILE")
        try:
            h = load_hamiltonian(cfg.input)
        except OSError as exc:
            raise ConfigError(f"cannot read {cfg.input}: {exc.strerror}") from None
    n = max(2, h.num_wires)
    dev = _device(cfg, n)
    cost = VQECost(_vqe_ansatz, h, dev)
    weights = strong_ent_layers_uniform(cfg.layers, n, high=0.1, seed=cfg.seed)
    meta = {"wires": n, "terms": len(h.terms)}
    if n <= ORACLE_MAX_WIRES:
        meta["ground_energy"] = h.ground_energy(n)
    else:
        meta["notice"] = f"oracle skipped: {n} wires exceeds the limit of {ORACLE_MAX_WIRES}"
        print(f"notice: {meta['notice']}", file=sys.stderr)
    _, rows = _optimize(cfg, cost, weights, lambda t, p, c: [t, float(c)])
    meta["final_energy"] = rows[-1][-1]
    if "ground_energy" in meta:
        meta["error"] = meta["final_energy"] - meta["ground_energy"]
    return Trace(asdict(cfg), ["step", "energy"], rows, meta)


def load_dataset(path) -> tuple[np.ndarray, np.ndarray]:
    """CSV rows ``x_1, ..., x_k, label`` with labels in {-1, +1}; a header row is allowed."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            raw = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    if raw:
        try:
            [float(v) for v in raw[0]]
        except ValueError:
            raw = raw[1:]  # header
    if not raw:
        raise ConfigError(f"dataset {path} is empty")
    try:
        data = np.array([[float(v) for v in r] for r in raw])
    except ValueError as exc:
        raise ConfigError(f"dataset {path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] < 2:
        raise ConfigError("dataset rows need at least one feature and a label, all of equal length")
    X, Y = data[:, :-1], data[:, -1]
    if X.shape[1] > MAX_FEATURES:
        raise ConfigError(f"at most {MAX_FEATURES} features are supported, got {X.shape[1]}")
    if not np.all(np.isin(Y, (-1.0, 1.0))):
        raise ConfigError("labels must be -1 or +1")
    return X, Y


def run_classifier(cfg: RunConfig, data=None) -> Trace:
    """Variational classifier: embedding, entangling layers, Z expectation plus bias."""
    if data is None:
        if cfg.input is None:
            raise ConfigError("run classifier needs --data FILE")
        data = load_dataset(cfg.input)
    X, Y = data
    n = max(2, X.shape[1])
    dev = _device(cfg, n)

    def circuit(weights, x=None):
        AngleEmbedding(x, wires=range(n))
        StronglyEntanglingLayers(weights, wires=range(n))
        return expval(PauliZ(0))

    q = QNode(circuit, dev)

    def predict(params, x):
        bias, weights = params
        return q(weights, x=x) + bias

    def cost(params):
        errs = [(predict(params, x) - y) ** 2 for x, y in zip(X, Y)]
        return mean(np.stack(errs)) if len(errs) > 1 else errs[0]

    def accuracy(params):
        preds = np.array([np.sign(float(np.asarray(predict(params, x)))) for x in X])
        return float(np.mean(preds == Y))

    weights = strong_ent_layers_uniform(cfg.layers, n, seed=cfg.seed)
    params = (0.0, weights)
    rows = []
    opt = make_optimizer(cfg.optimizer, cfg.lr)
    for step in range(cfg.steps):
        acc = accuracy(params)
        params, loss = opt.step_and_cost(cost, params)
        rows.append([step, float(loss), acc])
    rows.append([cfg.steps, float(np.asarray(cost(params))), accuracy(params)])
    meta = {"samples": int(len(Y)), "features": int(X.shape[1]), "final_accuracy": rows[-1][2]}
    return Trace(asdict(cfg), ["step", "loss", "accuracy"], rows, meta)


DEMOS = {"qubit-rotation": run_qubit_rotation, "vqe": run_vqe, "classifier": run_classifier}
DEMO_DEFAULTS = {
    "qubit-rotation": {"steps": 100, "lr": 0.4, "optimizer": "gd"},
    "vqe": {"steps": 200, "lr": 0.1, "optimizer": "adam"},
    "classifier": {"steps": 200, "lr": 0.1, "optimizer": "adam", "layers": 2},
}


# argument parsing -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qhybrid", description="Hybrid quantum-classical demos.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("devices", help="list registered devices")

    run = sub.add_parser("run", help="run a demo and write its trace")
    demos = run.add_subparsers(dest="demo", required=True)
    for name in DEMOS:
        d = demos.add_parser(name)
        d.add_argument("--device", default="default.qubit")
        d.add_argument("--shots", type=int, default=0)
        d.add_argument("--seed", type=int, default=0)
        d.add_argument("--steps", type=int)
        d.add_argument("--lr", type=float)
        d.add_argument("--optimizer", choices=sorted(OPTIMIZERS))
        d.add_argument("--layers", type=int)
        d.add_argument("--out", help="output file (default: stdout)")
        d.add_argument("--format", choices=("csv", "json"), default="csv")
        if name == "vqe":
            d.add_argument("--hamiltonian", dest="input", required=True, metavar="FILE")
        elif name == "classifier":
            d.add_argument("--data", dest="input", required=True, metavar="FILE")
    return p


def config_from_args(ns) -> RunConfig:
    values = {k: v for k, v in vars(ns).items() if k not in ("command",) and v is not None}
    values.setdefault("input", None)
    for k, v in DEMO_DEFAULTS[ns.demo].items():
        values.setdefault(k, v)
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def _devices_table() -> str:
    lines = ["short_name,model,version,api_version"]
    for d in list_devices():
        lines.append(f"{d.short_name},{d.model},{d.version},{d.api_version}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if ns.command == "devices":
        sys.stdout.write(_devices_table())
        return 0
    try:
        cfg = config_from_args(ns)
        trace = DEMOS[cfg.demo](cfg)
    except (ConfigError, ParseError, UnknownDevice, IncompatibleApiVersion) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - report any failure as a runtime error
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    text = trace.emit(cfg.format)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
