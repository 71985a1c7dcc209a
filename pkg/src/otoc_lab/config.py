"""Run configuration: defaults, flat ``key=value`` files and validation."""

from dataclasses import asdict, dataclass, fields, replace
import math
import os

from .dynamics import DEFAULT_DT_US
from .spin_model import J_COUPLING, DEFAULT_G_OVER_J, DEFAULT_T2_STAR_US

EXPERIMENTS = ("otoc", "qpd", "nonclassicality", "sweep")
PROTOCOL_NAMES = ("ideal", "weak", "interferometric", "clock")
OUTPUT_DIR_ENV = "OTOC_LAB_OUTPUT_DIR"
DEFAULT_T_MAX_US = 60.0
DEFAULT_SWEEP_T_MAX_US = 200.0


class ConfigError(ValueError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "otoc"
    n_qubits: int = 5
    h_over_j: float = 0.0
    g_over_j: float = DEFAULT_G_OVER_J
    j_coupling: float = J_COUPLING
    t2_star_us: float | None = DEFAULT_T2_STAR_US
    temperature_over_j: float | None = 1.0
    t_max_us: float | None = None
    dt_grid_us: float = 0.1
    dt_integration_us: float = DEFAULT_DT_US
    protocols: tuple = PROTOCOL_NAMES
    sweep_points: int = 15
    sweep_h_min: float = 0.0
    sweep_h_max: float = 0.5
    output_dir: str | None = None
    worker_count: int = 1
    method: str = "spectral"
    plot: bool = True

    def resolved(self) -> "RunConfig":
        """Fill experiment-dependent defaults and validate every field."""
        cfg = self
        if cfg.t_max_us is None:
            t_max = DEFAULT_SWEEP_T_MAX_US if cfg.experiment == "sweep" else DEFAULT_T_MAX_US
            cfg = replace(cfg, t_max_us=t_max)
        if cfg.output_dir is None:
            cfg = replace(cfg, output_dir=os.environ.get(OUTPUT_DIR_ENV, "otoc_output"))
        cfg.validate()
        return cfg

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment", f"must be one of {', '.join(EXPERIMENTS)}, got {self.experiment!r}")
        if not isinstance(self.n_qubits, int) or self.n_qubits < 2:
            raise ConfigError("n_qubits", f"must be an integer >= 2, got {self.n_qubits!r}")
        if self.n_qubits > 12:
            raise ConfigError("n_qubits", "dense simulation is limited to 12 qubits")
        for name in ("h_over_j", "g_over_j"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(name, "must be finite")
        if not self.j_coupling > 0:
            raise ConfigError("j_coupling", "must be positive")
        if self.t2_star_us is not None and not self.t2_star_us > 0:
            raise ConfigError("t2_star_us", "must be positive or 'none'")
        if self.temperature_over_j is not None and not self.temperature_over_j > 0:
            raise ConfigError("temperature_over_j", "must be positive or 'infinite'")
        if self.t_max_us is None or not self.t_max_us > 0:
            raise ConfigError("t_max_us", "must be positive")
        if not self.dt_grid_us > 0:
            raise ConfigError("dt_grid_us", "must be positive")
        if not self.dt_integration_us > 0:
            raise ConfigError("dt_integration_us", "must be positive")
        ratio = self.dt_grid_us / self.dt_integration_us
        if abs(ratio - round(ratio)) * self.dt_integration_us > 1e-9:
            raise ConfigError("dt_integration_us", "must divide dt_grid_us")
        steps = self.t_max_us / self.dt_grid_us
        if abs(steps - round(steps)) * self.dt_grid_us > 1e-9:
            raise ConfigError("t_max_us", "must be a multiple of dt_grid_us")
        if not self.protocols:
            raise ConfigError("protocols", "select at least one protocol")
        for p in self.protocols:
            if p not in PROTOCOL_NAMES:
                raise ConfigError("protocols", f"unknown protocol {p!r}")
        if self.experiment == "sweep" and self.sweep_points < 2:
            raise ConfigError("sweep_points", "must be >= 2 for a sweep")
        if not isinstance(self.worker_count, int) or self.worker_count < 1:
            raise ConfigError("worker_count", "must be a positive integer")
        if self.method not in ("spectral", "step"):
            raise ConfigError("method", "must be 'spectral' or 'step'")

    def to_manifest(self) -> dict:
        data = asdict(self)
        data["protocols"] = list(self.protocols)
        return data


FIELD_NAMES = tuple(f.name for f in fields(RunConfig))


def _parse_optional_float(text: str, none_words: tuple, name: str):
    if text.strip().lower() in none_words:
        return None
    try:
        return float(text)
    except ValueError:
        raise ConfigError(name, f"expected a number or {none_words[0]!r}, got {text!r}") from None


def _parse_bool(text: str, name: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(name, f"expected a boolean, got {text!r}")


def parse_value(name: str, text) -> object:
    """Convert a raw string to the type of RunConfig field ``name``."""
    if not isinstance(text, str):
        return text
    text = text.strip()
    if name == "t2_star_us":
        return _parse_optional_float(text, ("none", "inf", "infinite", "closed"), name)
    if name == "temperature_over_j":
        return _parse_optional_float(text, ("infinite", "inf", "none"), name)
    if name == "t_max_us":
        return _parse_optional_float(text, ("default", "none"), name)
    if name == "protocols":
        items = tuple(p.strip().lower() for p in text.split(",") if p.strip())
        return tuple(p for p in PROTOCOL_NAMES if p in items) + tuple(p for p in items if p not in PROTOCOL_NAMES)
    if name in ("n_qubits", "sweep_points", "worker_count"):
        try:
            return int(text)
        except ValueError:
            raise ConfigError(name, f"expected an integer, got {text!r}") from None
    if name == "plot":
        return _parse_bool(text, name)
    if name in ("experiment", "method", "output_dir"):
        return text
    try:
        return float(text)
    except ValueError:
        raise ConfigError(name, f"expected a number, got {text!r}") from None


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; keys may use dashes."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in FIELD_NAMES:
            raise ConfigError(key, f"unknown configuration key in {path}:{lineno}")
        values[key] = parse_value(key, value)
    return values


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the config file, then command-line overrides."""
    merged = {}
    merged.update(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(merged) - set(FIELD_NAMES)
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError(name, "unknown configuration key")
    parsed = {k: parse_value(k, v) for k, v in merged.items()}
    return RunConfig(**parsed).resolved()
