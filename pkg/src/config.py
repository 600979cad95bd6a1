# src/config.py

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple
import hashlib
import json
import math
import os

from .besov import BesovParams
from .errors import ConfigurationError, ParameterError
from .field import GridSpec

FORCING_KINDS = ("none", "steady_low_mode", "time_decaying_low_mode")
NONLINEARITY_MODES = ("advective", "hamilton")


@dataclass(frozen=True)
class ForcingSpec:
    """
    External force f of the momentum equation.

    Attributes:
        kind (str): "none", "steady_low_mode" or "time_decaying_low_mode".
        amplitude (float): Peak velocity-rate magnitude of the forcing mode.
        mode (Tuple[int, ...]): Integer wavenumber vector of the forcing mode.
        decay_rate (float): Exponential decay rate for the time-decaying kind.
    """

    kind: str = "none"
    amplitude: float = 0.0
    mode: Tuple[int, ...] = ()
    decay_rate: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", tuple(int(k) for k in self.mode))
        if self.kind not in FORCING_KINDS:
            raise ConfigurationError(
                f"forcing kind '{self.kind}' not one of {list(FORCING_KINDS)}", keys=["forcing.kind"]
            )
        if not math.isfinite(self.amplitude):
            raise ConfigurationError(f"forcing amplitude must be finite, got {self.amplitude}", keys=["forcing.amplitude"])
        if not self.decay_rate >= 0:
            raise ConfigurationError(f"forcing decay_rate must be >= 0, got {self.decay_rate}", keys=["forcing.decay_rate"])

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "amplitude": self.amplitude, "mode": list(self.mode), "decay_rate": self.decay_rate}


@dataclass(frozen=True)
class AnalysisOptions:
    """
    Options of a CLI run that do not change the solution.

    Attributes:
        snapshot_every (int): Write a snapshot every this many steps; 0 writes the final one only.
        picard_max_iter (int): Iteration cap of the Picard report.
        picard_tol (float): Convergence tolerance of the Picard report.
    """

    snapshot_every: int = 0
    picard_max_iter: int = 10
    picard_tol: float = 1e-8

    def to_dict(self) -> Dict[str, Any]:
        return {"snapshot_every": self.snapshot_every, "picard_max_iter": self.picard_max_iter,
                "picard_tol": self.picard_tol}


@dataclass(frozen=True)
class SimConfig:
    """
    Parameters of one mild-solution run.

    Attributes:
        grid (GridSpec): Periodic grid.
        nu (float): Kinematic viscosity.
        t_end (float): Time horizon T.
        dt (float): Time step.
        nonlinearity_mode (str): "advective" or "hamilton".
        forcing (ForcingSpec): External force.
        diag_every (int): Steps between diagnostics records.
        besov (BesovParams): Norm used for monitoring.
        r_exponent (float): Time-integrability exponent of the forcing norm.
        linear_only (bool): Drop the nonlinear term (heat flow plus forcing).
        blowup_factor (float): Energy growth over the initial energy treated as blow-up.
    """

    grid: GridSpec
    nu: float
    t_end: float
    dt: float
    nonlinearity_mode: str = "advective"
    forcing: ForcingSpec = field(default_factory=ForcingSpec)
    diag_every: int = 1
    besov: BesovParams = field(default_factory=BesovParams)
    r_exponent: float = 1.0
    linear_only: bool = False
    blowup_factor: float = 1e6

    def __post_init__(self) -> None:
        if not self.nu > 0:
            raise ConfigurationError(f"nu must be > 0, got {self.nu}", keys=["nu"])
        if not self.t_end >= 0:
            raise ConfigurationError(f"t_end must be >= 0, got {self.t_end}", keys=["t_end"])
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be > 0, got {self.dt}", keys=["dt"])
        if self.t_end > 0 and self.dt > self.t_end:
            raise ConfigurationError(f"dt ({self.dt}) must not exceed t_end ({self.t_end})", keys=["dt", "t_end"])
        if self.nonlinearity_mode not in NONLINEARITY_MODES:
            raise ConfigurationError(
                f"nonlinearity_mode '{self.nonlinearity_mode}' not one of {list(NONLINEARITY_MODES)}",
                keys=["nonlinearity_mode"],
            )
        if self.diag_every < 1:
            raise ConfigurationError(f"diag_every must be >= 1, got {self.diag_every}", keys=["diag_every"])
        if not self.r_exponent >= 1:
            raise ConfigurationError(f"r_exponent must be >= 1, got {self.r_exponent}", keys=["r_exponent"])
        if not self.blowup_factor > 1:
            raise ConfigurationError(f"blowup_factor must be > 1, got {self.blowup_factor}", keys=["blowup_factor"])
        if self.forcing.kind != "none" and len(self.forcing.mode) != self.grid.dim:
            raise ConfigurationError(
                f"forcing mode {list(self.forcing.mode)} does not match grid dim {self.grid.dim}",
                keys=["forcing.mode", "grid.dim"],
            )

    @property
    def n_steps(self) -> int:
        """Number of steps to reach t_end; the last one may be shorter than dt."""
        if self.t_end == 0:
            return 0
        return int(math.ceil(self.t_end / self.dt - 1e-9))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "grid": self.grid.to_dict(),
            "nu": self.nu,
            "t_end": self.t_end,
            "dt": self.dt,
            "nonlinearity_mode": self.nonlinearity_mode,
            "linear_only": self.linear_only,
            "forcing": self.forcing.to_dict(),
            "diag_every": self.diag_every,
            "besov": self.besov.to_dict(),
            "r_exponent": self.r_exponent,
            "blowup_factor": self.blowup_factor,
        }


# Known keys per section; values of None mark nested sections.
SCHEMA: Dict[str, Any] = {
    "grid": {"dim": None, "sizes": None, "domain_length": None},
    "nu": None,
    "t_end": None,
    "dt": None,
    "nonlinearity_mode": None,
    "linear_only": None,
    "forcing": {"kind": None, "amplitude": None, "mode": None, "decay_rate": None},
    "diag_every": None,
    "besov": {"s": None, "p": None, "q_idx": None},
    "r_exponent": None,
    "blowup_factor": None,
    "analysis": {"snapshot_every": None, "picard_max_iter": None, "picard_tol": None},
}

ALIASES: Dict[str, str] = {
    "viscosity": "nu",
    "kinematic_viscosity": "nu",
    "timestep": "dt",
    "time_step": "dt",
    "end_time": "t_end",
    "t_final": "t_end",
    "resolution": "sizes",
    "length": "domain_length",
    "nonlinearity": "nonlinearity_mode",
}


def edit_distance(a: str, b: str) -> int:
    """
    Levenshtein distance between two strings.
    """
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def suggest_key(key: str, known: List[str]) -> Optional[str]:
    """
    Nearest known key (or the key an alias stands for) within edit distance 2.
    """
    candidates = [(edit_distance(key, k), k, k) for k in known]
    candidates += [(edit_distance(key, alias), alias, target) for alias, target in ALIASES.items() if target in known]
    best = min(candidates, default=None)
    if best is None or best[0] > 2:
        return None
    return best[2]


def _check_keys(section: Dict[str, Any], schema: Dict[str, Any], path: str) -> None:
    for key, value in section.items():
        dotted = f"{path}{key}"
        if key not in schema:
            hint = suggest_key(key, list(schema))
            message = f"unknown key '{dotted}'"
            if hint is not None:
                message += f"; did you mean '{path}{hint}'?"
            raise ConfigurationError(message, keys=[dotted])
        if isinstance(schema[key], dict):
            if not isinstance(value, dict):
                raise ConfigurationError(f"'{dotted}' must be an object", keys=[dotted])
            _check_keys(value, schema[key], f"{dotted}.")


def _number(data: Dict[str, Any], key: str, default: Any, path: str = "") -> float:
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"'{path}{key}' must be a number, got {value!r}", keys=[f"{path}{key}"])
    return float(value)


def _integer(data: Dict[str, Any], key: str, default: Any, path: str = "") -> int:
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"'{path}{key}' must be an integer, got {value!r}", keys=[f"{path}{key}"])
    return value


def build_config(data: Dict[str, Any]) -> Tuple[SimConfig, AnalysisOptions]:
    """
    Validates a parsed configuration document and fills defaults.

    Args:
        data (Dict[str, Any]): The decoded JSON document.

    Returns:
        Tuple[SimConfig, AnalysisOptions]: The run configuration and analysis options.

    Raises:
        ConfigurationError: On unknown keys, wrong types, missing keys or violated constraints.
    """
    if not isinstance(data, dict):
        raise ConfigurationError("configuration must be a JSON object")
    _check_keys(data, SCHEMA, "")
    for key in ("grid", "nu", "t_end", "dt"):
        if key not in data:
            raise ConfigurationError(f"missing required key '{key}'", keys=[key])

    grid_data = data["grid"]
    sizes = grid_data.get("sizes")
    if not isinstance(sizes, list) or not all(isinstance(n, int) and not isinstance(n, bool) for n in sizes):
        raise ConfigurationError(f"'grid.sizes' must be a list of integers, got {sizes!r}", keys=["grid.sizes"])
    dim = _integer(grid_data, "dim", len(sizes), "grid.")
    lengths = grid_data.get("domain_length", [1.0] * len(sizes))
    if isinstance(lengths, (int, float)) and not isinstance(lengths, bool):
        lengths = [float(lengths)] * len(sizes)
    grid = GridSpec(dim=dim, sizes=tuple(sizes), domain_length=tuple(lengths))

    forcing_data = data.get("forcing", {})
    forcing = ForcingSpec(
        kind=forcing_data.get("kind", "none"),
        amplitude=_number(forcing_data, "amplitude", 0.0, "forcing."),
        mode=tuple(forcing_data.get("mode", [1] + [0] * (dim - 1))),
        decay_rate=_number(forcing_data, "decay_rate", 0.0, "forcing."),
    )

    try:
        besov = BesovParams.from_dict(data.get("besov", {}))
    except (ParameterError, TypeError, ValueError) as e:
        raise ConfigurationError(f"invalid 'besov' section: {e}", keys=["besov"])

    linear_only = data.get("linear_only", False)
    if not isinstance(linear_only, bool):
        raise ConfigurationError(f"'linear_only' must be true or false, got {linear_only!r}", keys=["linear_only"])

    cfg = SimConfig(
        grid=grid,
        nu=_number(data, "nu", None),
        t_end=_number(data, "t_end", None),
        dt=_number(data, "dt", None),
        nonlinearity_mode=data.get("nonlinearity_mode", "advective"),
        forcing=forcing,
        diag_every=_integer(data, "diag_every", 1),
        besov=besov,
        r_exponent=_number(data, "r_exponent", 1.0),
        linear_only=linear_only,
        blowup_factor=_number(data, "blowup_factor", 1e6),
    )

    analysis_data = data.get("analysis", {})
    analysis = AnalysisOptions(
        snapshot_every=_integer(analysis_data, "snapshot_every", 0, "analysis."),
        picard_max_iter=_integer(analysis_data, "picard_max_iter", 10, "analysis."),
        picard_tol=_number(analysis_data, "picard_tol", 1e-8, "analysis."),
    )
    if analysis.snapshot_every < 0:
        raise ConfigurationError("'analysis.snapshot_every' must be >= 0", keys=["analysis.snapshot_every"])
    return cfg, analysis


def parse_config(path: str) -> Tuple[SimConfig, AnalysisOptions]:
    """
    Reads and validates a JSON configuration file.

    Args:
        path (str): Path of the configuration file.

    Returns:
        Tuple[SimConfig, AnalysisOptions]: The run configuration and analysis options.

    Raises:
        ConfigurationError: If the file is missing, malformed or invalid.
    """
    if not os.path.exists(path):
        raise ConfigurationError(f"configuration file '{path}' not found")
    with open(path, "r") as f:
        text = f.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(
            f"{path}:{e.lineno}:{e.colno}: malformed configuration: {e.msg}", line=e.lineno, column=e.colno
        )
    return build_config(data)


def config_document(cfg: SimConfig, analysis: Optional[AnalysisOptions] = None) -> Dict[str, Any]:
    data = cfg.to_dict()
    data["analysis"] = (analysis or AnalysisOptions()).to_dict()
    return data


def config_digest(cfg: SimConfig, analysis: Optional[AnalysisOptions] = None) -> str:
    """
    SHA-256 of the canonical JSON form of a parsed configuration.
    """
    encoded = json.dumps(config_document(cfg, analysis), sort_keys=True).encode()
    return hashlib.sha256(encoded).hexdigest()
