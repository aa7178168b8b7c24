"""Run configuration: a sectioned ``key = value`` file read with :mod:`configparser`.

Sections and keys::

    [process]        kappa theta0 beta sigma lam mu_j sigma_j gamma t_season
    [scenario.NAME]  weight, plus any [process] key as an override
    [contract]       every ContractSpec field
    [hedging]        target_rho horizon roll_days_before_expiry rebalance_every
                     h basis_kappa start_date
    [engine]         n_paths horizon steps_per_year base_seed x0 export_paths
    [output]         dir

Every key is optional; omitted keys take the calibrated defaults. Empty
values (``x0 =``) mean "use the default". Unknown sections or keys are
rejected with their line number.
"""

import configparser
from dataclasses import dataclass, field, fields
from datetime import date
import hashlib
import io
import os
import re
from typing import Optional, Union

from .clearing import ContractSpec
from .engine import DEFAULT_SCENARIOS, ScenarioSpec, check_mixture
from .errors import SitmarkError, ValidationError
from .process import PARAM_NAMES, ProcessParams

ENV_CONFIG = "SITMARK_CONFIG"


class ConfigError(ValidationError):
    """Configuration could not be parsed or validated."""


@dataclass(frozen=True)
class HedgingConfig:
    target_rho: float = 0.85
    horizon: float = 1.0
    roll_days_before_expiry: int = 5
    rebalance_every: int = 1
    h: Union[float, str] = "optimal"
    basis_kappa: Optional[float] = None
    start_date: date = date(2026, 1, 2)

    def __post_init__(self):
        if not 0 < self.target_rho <= 1:
            raise ValidationError("target_rho must lie in (0, 1]")
        if not self.horizon > 0:
            raise ValidationError("horizon must be > 0")
        if self.roll_days_before_expiry < 0:
            raise ValidationError("roll_days_before_expiry must be >= 0")
        if self.rebalance_every < 1:
            raise ValidationError("rebalance_every must be >= 1")
        if self.h != "optimal" and not isinstance(self.h, float):
            raise ValidationError("h must be a number or 'optimal'")
        if self.basis_kappa is not None and not self.basis_kappa > 0:
            raise ValidationError("basis_kappa must be > 0")


@dataclass(frozen=True)
class EngineConfig:
    n_paths: int = 10_000
    horizon: float = 3.0
    steps_per_year: int = 252
    base_seed: int = 20260102
    x0: Optional[float] = None
    export_paths: int = 0

    def __post_init__(self):
        if self.n_paths < 2:
            raise ValidationError("n_paths must be >= 2")
        if not self.horizon > 0:
            raise ValidationError("horizon must be > 0")
        if self.steps_per_year < 1:
            raise ValidationError("steps_per_year must be >= 1")
        if self.export_paths < 0:
            raise ValidationError("export_paths must be >= 0")

    @property
    def dt(self) -> float:
        return 1.0 / self.steps_per_year


@dataclass(frozen=True)
class RunConfig:
    process: ProcessParams = ProcessParams()
    scenarios: tuple = DEFAULT_SCENARIOS
    contract: ContractSpec = ContractSpec()
    hedging: HedgingConfig = HedgingConfig()
    engine: EngineConfig = EngineConfig()
    output_dir: str = "out"

    def __post_init__(self):
        check_mixture(self.scenarios)
        names = [s.name for s in self.scenarios]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate scenario names")

    def digest(self) -> str:
        return hashlib.sha256(dumps_config(self).encode()).hexdigest()


SECTION_KEYS = {
    "process": set(PARAM_NAMES),
    "contract": {f.name for f in fields(ContractSpec)},
    "hedging": {f.name for f in fields(HedgingConfig)},
    "engine": {f.name for f in fields(EngineConfig)},
    "output": {"dir"},
}
SCENARIO_KEYS = set(PARAM_NAMES) | {"weight"}
_INT_FIELDS = {"roll_days_before_expiry", "rebalance_every", "n_paths", "steps_per_year", "base_seed", "export_paths", "n_monthly", "n_quarterly"}


def _line_index(text: str) -> dict:
    """Map (section, key) and (section, None) to 1-based line numbers."""
    index, section = {}, None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), n)
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", s)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip().lower()), n)
    return index


def _convert(key: str, raw: str):
    raw = raw.strip()
    if raw == "":
        return None
    if key == "start_date":
        return date.fromisoformat(raw)
    if key == "h" and raw.lower() == "optimal":
        return "optimal"
    if key in _INT_FIELDS:
        return int(raw)
    return float(raw)


def loads_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse and validate configuration text."""
    cp = configparser.ConfigParser(interpolation=None, strict=True, default_section="__none__")
    try:
        cp.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:1: key outside of any section") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"{source}:{lineno}:1: cannot parse {line.strip()!r}") from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(f"{source}:{exc.lineno}:1: {exc.message if hasattr(exc, 'message') else exc}") from None
    lines = _line_index(text)

    def where(section, key=None):
        return f"{source}:{lines.get((section, key), lines.get((section, None), 0))}"

    values = {name: {} for name in SECTION_KEYS}
    scenarios = []
    for section in cp.sections():
        if section.startswith("scenario."):
            allowed = SCENARIO_KEYS
        elif section in SECTION_KEYS:
            allowed = SECTION_KEYS[section]
        else:
            raise ConfigError(f"{where(section)}: unknown section [{section}]")
        parsed = {}
        for key, raw in cp.items(section):
            if key not in allowed:
                raise ConfigError(f"{where(section, key)}: unknown key {key!r} in [{section}]")
            try:
                v = raw.strip() if (section, key) == ("output", "dir") else _convert(key, raw)
            except ValueError as exc:
                raise ConfigError(f"{where(section, key)}: [{section}] {key}: invalid value {raw!r} ({exc})") from None
            if v is not None:
                parsed[key] = v
        if section.startswith("scenario."):
            name = section[len("scenario."):].strip()
            weight = parsed.pop("weight", 1.0)
            try:
                scenarios.append(ScenarioSpec(name, parsed, weight))
            except SitmarkError as exc:
                raise ConfigError(f"{where(section)}: {exc}") from None
        else:
            values[section] = parsed

    def build(section, factory, **kw):
        try:
            return factory(**values[section], **kw)
        except (SitmarkError, ValueError, TypeError) as exc:
            key = next((k for k in values[section] if re.search(rf"\b{k}\b", str(exc))), None)
            raise ConfigError(f"{where(section, key)}: [{section}] {exc}") from None

    process = build("process", ProcessParams)
    contract = build("contract", ContractSpec)
    hedging = build("hedging", HedgingConfig)
    engine = build("engine", EngineConfig)
    for s in scenarios:
        try:
            s.params(process)
        except SitmarkError as exc:
            raise ConfigError(f"{where('scenario.' + s.name)}: scenario {s.name!r}: {exc}") from None
    try:
        return RunConfig(
            process=process,
            scenarios=tuple(scenarios) if scenarios else DEFAULT_SCENARIOS,
            contract=contract,
            hedging=hedging,
            engine=engine,
            output_dir=values["output"].get("dir", "out"),
        )
    except SitmarkError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path: Optional[str] = None) -> RunConfig:
    """Load a configuration file; ``None`` falls back to ``$SITMARK_CONFIG`` or defaults."""
    path = path or os.environ.get(ENV_CONFIG)
    if not path:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads_config(text, source=str(path))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v))
    if isinstance(v, date):
        return v.isoformat()
    return str(v)


def dumps_config(config: RunConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp["process"] = {k: _fmt(v) for k, v in config.process.to_dict().items()}
    for s in config.scenarios:
        cp[f"scenario.{s.name}"] = {"weight": _fmt(float(s.mixture_weight)), **{k: _fmt(float(v)) for k, v in s.overrides.items()}}
    cp["contract"] = {f.name: _fmt(getattr(config.contract, f.name)) for f in fields(ContractSpec)}
    cp["hedging"] = {f.name: _fmt(getattr(config.hedging, f.name)) for f in fields(HedgingConfig)}
    cp["engine"] = {f.name: _fmt(getattr(config.engine, f.name)) for f in fields(EngineConfig)}
    cp["output"] = {"dir": config.output_dir}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def save_config(config: RunConfig, path) -> None:
    from .io import atomic_write_text

    atomic_write_text(path, dumps_config(config))
