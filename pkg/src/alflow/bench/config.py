"""Run configuration: flat ``key = value`` files."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

CASES = ("bingham-channel", "ldc-carreau", "obstacle-euler")


@dataclass
class RunConfig:
    case: str = "bingham-channel"
    k: int = 2
    refs: int = 2
    gamma: float = 1e4
    family: str = "bingham-be"
    nu: float = 1.0
    r: float | None = None
    r1: float | None = None
    r2: float | None = None
    beta1: float | None = None
    beta2: float | None = None
    Gamma1: float | None = None
    Gamma2: float | None = None
    tau_y: float | None = None
    eps: float | None = None
    sweep_param: str = "eps"
    sweep_values: list = field(default_factory=list)
    continuation: str = "secant"
    newton_atol: float = 1e-8
    newton_max_iter: int = 40
    line_search: bool = True
    krylov_rtol: float = 1e-10
    krylov_maxiter: int = 400
    restart: int = 100
    mg_cycles: int = 2
    mg_sweeps: int = 5
    relaxation: str = "macrostar"
    stabilization: bool = False
    stab_coeff: float = 5e-3
    convection: bool = True
    mesh_nx: int = 16
    mesh_ny: int = 8
    mesh_resolution: float = 1.1
    fd_check: bool = False
    dump_blocks: bool = False
    compare_power_law: bool = False
    keep_going: bool = False
    out_dir: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.case not in CASES:
            raise ValueError(f"unknown case {self.case!r}; choose from {CASES}")
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.refs < 0:
            raise ValueError("refs must be nonnegative")
        if not self.sweep_values:
            raise ValueError("sweep schedule must be nonempty")
        if self.continuation not in ("secant", "naive"):
            raise ValueError("continuation must be 'secant' or 'naive'")

    def model_params(self) -> dict:
        from ..rheology import FAMILIES
        names = {f.name for f in fields(FAMILIES[self.family])}
        return {n: getattr(self, n) for n in names if getattr(self, n) is not None}

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _convert(f, text: str):
    text = text.strip()
    t = str(f.type)
    if f.name == "sweep_values":
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    if text.lower() in ("none", ""):
        return None
    if t.startswith("bool"):
        low = text.lower()
        if low not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
            raise ValueError(f"{f.name}: cannot read {text!r} as a boolean")
        return low in ("true", "1", "yes", "on")
    if t.startswith("int"):
        return int(text)
    if t.startswith("float"):
        return float(text)
    return text


def parse_assignments(pairs: dict[str, str], base: RunConfig | None = None) -> RunConfig:
    known = {f.name: f for f in fields(RunConfig)}
    values = {}
    for key, text in pairs.items():
        if key not in known:
            raise ValueError(f"unknown configuration key {key!r}")
        values[key] = _convert(known[key], text)
    if base is None:
        case = values.get("case", RunConfig.case)
        from .cases import case_defaults
        base = case_defaults(case)
    return base.replace(**values)


def read_config(path, base: RunConfig | None = None) -> RunConfig:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    pairs = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        k, v = line.split("=", 1)
        pairs[k.strip()] = v.strip()
    return parse_assignments(pairs, base)


def write_config(cfg: RunConfig, path):
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if isinstance(v, list):
            v = ",".join(repr(x) for x in v)
        lines.append(f"{f.name} = {v}")
    Path(path).write_text("\n".join(lines) + "\n")
