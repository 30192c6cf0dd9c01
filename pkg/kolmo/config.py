"""
Configuration loader module for reading and validating scheme run configs.
"""
# built-in imports
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

# third party imports
import yaml

POTENTIAL_KINDS = ("zero", "quadratic", "polynomial")


class ConfigError(ValueError):
    """Invalid run configuration. The CLI exits with status 2."""


def _check_keys(cls, data: Dict[str, Any], section: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"Section '{section}' must be a mapping, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown keys in '{section}': {', '.join(unknown)}")


def _positive(value: Any, name: str) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"'{name}' must be a number, got {value!r}") from e
    if not value > 0:
        raise ConfigError(f"'{name}' must be positive, got {value}")
    return value


def _count(value: Any, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"'{name}' must be an integer >= {minimum}, got {value!r}")
    return value


@dataclass(frozen=True)
class GridConfig:
    """Tensor grid: one (low, high) pair and one cell count per coordinate."""
    bounds: Tuple[Tuple[float, float], ...] = ((-6.0, 6.0),)
    cells: Tuple[int, ...] = (256,)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GridConfig":
        """Create grid config from dictionary."""
        _check_keys(cls, data, "grid")
        bounds = tuple(tuple(float(v) for v in pair) for pair in data.get("bounds", cls.bounds))
        cells = tuple(_count(c, "grid.cells", 2) for c in data.get("cells", cls.cells))
        if len(bounds) != len(cells):
            raise ConfigError(f"grid has {len(bounds)} bounds but {len(cells)} cell counts")
        for lo_hi in bounds:
            if len(lo_hi) != 2 or not lo_hi[1] > lo_hi[0]:
                raise ConfigError(f"Invalid grid bounds {lo_hi}")
        return cls(bounds, cells)


@dataclass(frozen=True)
class PotentialConfig:
    """
    Potential selector: zero, quadratic (|x_n|^2/2) or polynomial with
    coefficients c_0, c_1, ... applied to every coordinate of x_n.
    """
    kind: str = "zero"
    coefficients: Tuple[float, ...] = ()

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PotentialConfig":
        """Create potential config from dictionary."""
        _check_keys(cls, data, "potential")
        kind = data.get("kind", cls.kind)
        if kind not in POTENTIAL_KINDS:
            raise ConfigError(f"potential.kind must be one of {POTENTIAL_KINDS}, got {kind!r}")
        coefficients = tuple(float(c) for c in data.get("coefficients", ()))
        if kind == "polynomial" and not coefficients:
            raise ConfigError("A polynomial potential needs coefficients")
        if kind != "polynomial" and coefficients:
            raise ConfigError(f"Coefficients are only accepted for polynomial potentials, not {kind!r}")
        return cls(kind, coefficients)


@dataclass(frozen=True)
class InitialConfig:
    """Gaussian initial density: mean and per-coordinate variances."""
    mean: Tuple[float, ...] = (0.0,)
    variances: Tuple[float, ...] = (1.0,)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "InitialConfig":
        """Create initial-data config from dictionary."""
        _check_keys(cls, data, "initial")
        mean = tuple(float(m) for m in data.get("mean", cls.mean))
        variances = tuple(_positive(v, "initial.variances") for v in data.get("variances", cls.variances))
        if len(mean) != len(variances):
            raise ConfigError("initial.mean and initial.variances differ in length")
        return cls(mean, variances)


@dataclass(frozen=True)
class TransportConfig:
    """
    Inner optimiser settings. When ``epsilon`` is unset the entropic
    parameter is epsilon_scale * h^2. ``tol`` bounds the L1 residual of the
    step's second marginal.
    """
    epsilon: Optional[float] = None
    epsilon_scale: float = 0.1
    max_iters: int = 20_000
    tol: float = 1e-9

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TransportConfig":
        """Create transport config from dictionary."""
        _check_keys(cls, data, "transport")
        epsilon = data.get("epsilon")
        return cls(
            epsilon=None if epsilon is None else _positive(epsilon, "transport.epsilon"),
            epsilon_scale=_positive(data.get("epsilon_scale", cls.epsilon_scale), "transport.epsilon_scale"),
            max_iters=_count(data.get("max_iters", cls.max_iters), "transport.max_iters"),
            tol=_positive(data.get("tol", cls.tol), "transport.tol"),
        )

    def epsilon_for(self, h: float) -> float:
        """Entropic parameter used for a step of size h."""
        return self.epsilon if self.epsilon is not None else self.epsilon_scale * h * h


@dataclass(frozen=True)
class RunConfig:
    """A complete scheme run."""
    n: int = 1
    d: int = 1
    h: float = 0.05
    T: float = 0.5
    h_list: Tuple[float, ...] = ()
    snapshots: Tuple[float, ...] = ()
    seed: int = 0
    threads: Optional[int] = None
    out_dir: str = "kolmo-out"
    grid: GridConfig = field(default_factory=GridConfig)
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    transport: TransportConfig = field(default_factory=TransportConfig)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """Create run config from dictionary, validating every section."""
        _check_keys(cls, data, "run")
        n = _count(data.get("n", cls.n), "n")
        d = _count(data.get("d", cls.d), "d")
        if d != 1:
            raise ConfigError(f"Scheme runs support d=1 only, got d={d}")
        h = _positive(data.get("h", cls.h), "h")
        T = _positive(data.get("T", cls.T), "T")
        h_list = tuple(_positive(v, "h_list") for v in data.get("h_list", ()))
        snapshots = tuple(float(s) for s in data.get("snapshots", ()))
        for s in snapshots:
            if s < 0 or s > T:
                raise ConfigError(f"Snapshot time {s} outside [0, T={T}]")
        threads = data.get("threads")
        if threads is not None:
            threads = _count(threads, "threads")

        config = cls(
            n=n, d=d, h=h, T=T, h_list=h_list, snapshots=snapshots,
            seed=_count(data.get("seed", cls.seed), "seed", 0),
            threads=threads,
            out_dir=str(data.get("out_dir", cls.out_dir)),
            grid=GridConfig.from_dict(data.get("grid", {})),
            potential=PotentialConfig.from_dict(data.get("potential", {})),
            initial=InitialConfig.from_dict(data.get("initial", {})),
            transport=TransportConfig.from_dict(data.get("transport", {})),
        )
        width = n * d
        if len(config.grid.bounds) != width:
            raise ConfigError(f"grid needs {width} axes for n={n}, d={d}, got {len(config.grid.bounds)}")
        if len(config.initial.mean) != width:
            raise ConfigError(f"initial data needs {width} coordinates, got {len(config.initial.mean)}")
        return config

    def to_dict(self) -> Dict[str, Any]:
        """Convert config to a plain dictionary (lists instead of tuples)."""
        return _plain(asdict(self))

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Copy with CLI overrides applied; None values are ignored."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes)


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


class ConfigLoader:
    """
    Loads run configuration files (YAML or JSON).
    """
    def __init__(self, config_path: Path):
        """
        Initialize with path to the config file.
        """
        self.config_path = Path(config_path)

    def load_raw(self) -> Dict[str, Any]:
        """
        Parse the file without validation.
        """
        if not self.config_path.exists():
            raise FileNotFoundError(f"Config file not found: {self.config_path}")

        with open(self.config_path, "r", encoding="utf-8") as f:
            try:
                data = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ConfigError(f"Could not parse {self.config_path}: {e}") from e

        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigError(f"{self.config_path} must contain a mapping at the top level")
        return data

    def load(self) -> RunConfig:
        """
        Parse and validate the configuration.
        """
        return RunConfig.from_dict(self.load_raw())


def default_h_list(config: RunConfig) -> List[float]:
    """Step sizes for the convergence table: the configured list, else h, h/2, h/4."""
    if config.h_list:
        return list(config.h_list)
    return [config.h, config.h / 2.0, config.h / 4.0]
