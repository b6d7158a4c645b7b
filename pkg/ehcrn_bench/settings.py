# -*- coding: Utf-8 -*

import configparser
from typing import Any, Callable, NamedTuple, Optional, Union
from ehcrn import SystemParams, ChannelModel, FixedGains, EnergySpec, SweepConfig, SubgradientConfig, Trace, DomainError
from ehcrn import trial_rng, sample_trace, resolve_input_file

class ConfigError(ValueError):

    def __init__(self, message: str, source: str = "<config>", line: Optional[int] = None):
        self.source = source
        self.line = line
        location = source if line is None else f"{source}:{line}"
        super().__init__(f"{location}: {message}")

def _parse_str(text: str) -> str:
    return text.strip()

def _parse_int(text: str) -> int:
    return int(text.strip())

def _parse_float(text: str) -> float:
    return float(text.strip())

def _parse_bool(text: str) -> bool:
    try:
        return configparser.ConfigParser.BOOLEAN_STATES[text.strip().lower()]
    except KeyError:
        raise ValueError("expected a boolean (true/false, yes/no, on/off, 1/0)") from None

def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(value) for value in text.split(",") if value.strip())

def _parse_optional_floats(text: str) -> Optional[tuple[float, ...]]:
    return _parse_floats(text) or None

def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(item) for item in value)
    return str(value)

class _Option(NamedTuple):
    parse: Callable[[str], Any]
    default: Any

SCHEMA: dict[str, dict[str, _Option]] = {
    "system": {
        "alpha": _Option(_parse_float, 1.0),
        "e_max": _Option(_parse_float, 6.0),
        "sigma2": _Option(_parse_float, 0.1),
        "b_p": _Option(_parse_float, 1.0),
        "n_slots": _Option(_parse_int, 1),
    },
    "channel": {
        "preset": _Option(_parse_str, ""),
        "var_pp": _Option(_parse_float, 0.1),
        "var_ps": _Option(_parse_float, 0.1),
        "var_ss": _Option(_parse_float, 0.1),
        "var_sp": _Option(_parse_float, 0.1),
        "h_pp": _Option(_parse_optional_floats, None),
        "h_ps": _Option(_parse_optional_floats, None),
        "h_ss": _Option(_parse_optional_floats, None),
        "h_sp": _Option(_parse_optional_floats, None),
    },
    "energy": {
        "kind": _Option(_parse_str, EnergySpec.FIXED),
        "e_p": _Option(_parse_floats, (1.0,)),
        "e_s": _Option(_parse_floats, (1.0,)),
    },
    "sweep": {
        "axis": _Option(_parse_str, "b_p"),
        "grid": _Option(_parse_floats, (1.0,)),
        "trials": _Option(_parse_int, 1000),
        "seed": _Option(_parse_int, 0),
        "cooperation": _Option(_parse_str, SweepConfig.COOPERATION_BOTH),
    },
    "solver": {
        "step_power": _Option(_parse_float, 1e-3),
        "step_transfer": _Option(_parse_float, 1e-3),
        "step_dual": _Option(_parse_float, 1e-2),
        "epsilon": _Option(_parse_float, 1e-5),
        "max_iters": _Option(_parse_int, 200_000),
        "log_base_correction": _Option(_parse_bool, True),
        "schedule": _Option(_parse_str, SubgradientConfig.ANNEAL),
        "anneal_after": _Option(_parse_int, 5_000),
        "anneal_rate": _Option(_parse_float, 0.998),
        "polish": _Option(_parse_bool, True),
        "log_stride": _Option(_parse_int, 100),
        "warm_start": _Option(_parse_bool, False),
        "cross_check": _Option(_parse_bool, True),
        "workers": _Option(_parse_int, 0),
    },
    "oracle": {
        "instances": _Option(_parse_int, 200),
        "points": _Option(_parse_int, 400),
        "n_slots": _Option(_parse_int, 1),
        "alpha": _Option(_parse_optional_floats, None),
        "b_p": _Option(_parse_optional_floats, None),
    },
    "output": {
        "csv": _Option(_parse_str, ""),
        "plot_data": _Option(_parse_str, ""),
        "iteration_log": _Option(_parse_str, ""),
    },
}

def _locate(text: str) -> dict[tuple[str, Optional[str]], int]:
    lines = dict()
    section = None
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith(("#", ";")):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            lines.setdefault((section, None), number)
            continue
        if section is None:
            continue
        separators = [index for index in (line.find("="), line.find(":")) if index >= 0]
        if separators:
            key = line[:min(separators)].strip().lower()
            lines.setdefault((section, key), number)
    return lines

##########################################################################################################################

class RunConfig:

    def __init__(self, text: str = "", source: str = "<string>"):
        self.__source = source
        self.__values = {section: {key: option.default for key, option in options.items()} for section, options in SCHEMA.items()}
        self.__lines: dict[tuple[str, Optional[str]], int] = dict()
        self.__read(text)

    @staticmethod
    def from_file(filepath: str) -> "RunConfig":
        filepath = resolve_input_file(filepath)
        try:
            with open(filepath, "r", encoding="utf-8") as file:
                text = file.read()
        except OSError as e:
            raise ConfigError(f"Cannot read config file ({e.strerror})", filepath) from e
        return RunConfig(text, filepath)

    def __repr__(self) -> str:
        return "<{} source={}>".format(self.__class__.__name__, repr(self.__source))

    def __eq__(self, other) -> bool:
        if not isinstance(other, RunConfig):
            return NotImplemented
        return self.__values == other.__values

    __hash__ = None

    def __read(self, text: str) -> None:
        parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
        try:
            parser.read_string(text, source=self.__source)
        except configparser.MissingSectionHeaderError as e:
            raise ConfigError("Value outside of any [section]", self.__source, e.lineno) from e
        except configparser.ParsingError as e:
            raise ConfigError("Malformed line {!r}".format(e.errors[0][1]), self.__source, e.errors[0][0]) from e
        except configparser.Error as e:
            raise ConfigError(e.message.splitlines()[-1], self.__source, getattr(e, "lineno", None)) from e
        self.__lines = _locate(text)
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"Unknown section [{section}]", self.__source, self.__lines.get((section, None)))
            for key in parser.options(section):
                self.__assign(section, key, parser.get(section, key, raw=True), self.__lines.get((section, key)), self.__source)

    def __assign(self, section: str, key: str, raw: str, line: Optional[int], source: str) -> None:
        if section not in SCHEMA:
            raise ConfigError(f"Unknown section [{section}]", source, line)
        if key not in SCHEMA[section]:
            raise ConfigError(f"Unknown key '{key}' in [{section}]", source, line)
        try:
            value = SCHEMA[section][key].parse(raw)
        except ValueError as e:
            raise ConfigError(f"Invalid value {raw.strip()!r} for {section}.{key}: {e}", source, line) from e
        self.__values[section][key] = value

    def get(self, section: str, key: str) -> Any:
        return self.__values[section][key]

    def set(self, section: str, key: str, value: Union[str, int, float]) -> None:
        raw = value if isinstance(value, str) else _format(value)
        self.__assign(section, key, raw, None, "command line")
        self.__lines.pop((section, key), None)

    def override(self, assignment: str) -> None:
        name, separator, raw = assignment.partition("=")
        section, dot, key = name.strip().partition(".")
        if not separator or not dot:
            raise ConfigError(f"Override {assignment!r} must look like section.key=value", "command line")
        self.set(section.strip(), key.strip().lower(), raw)

    def to_string(self) -> str:
        blocks = list()
        for section, values in self.__values.items():
            lines = [f"[{section}]"]
            lines.extend(f"{key} = {_format(value)}" for key, value in values.items())
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"

    def line_of(self, section: str, key: Optional[str] = None) -> Optional[int]:
        return self.__lines.get((section, key), self.__lines.get((section, None)))

    def __build(self, section: str, builder: Callable[[], Any], key: Optional[str] = None) -> Any:
        try:
            return builder()
        except DomainError as e:
            raise ConfigError(str(e), self.__source, self.line_of(section, key)) from e

    ##########################################################################################################################

    def system_params(self) -> SystemParams:
        return self.__build("system", lambda: SystemParams(**self.__values["system"]))

    def channel(self) -> Union[ChannelModel, FixedGains]:
        values = self.__values["channel"]
        fixed = {name: values[name] for name in ("h_pp", "h_ps", "h_ss", "h_sp")}
        if any(gains is not None for gains in fixed.values()):
            missing = [name for name, gains in fixed.items() if gains is None]
            if missing:
                raise ConfigError(f"Fixed gains need h_pp, h_ps, h_ss and h_sp (missing {', '.join(missing)})",
                                  self.__source, self.line_of("channel"))
            return self.__build("channel", lambda: FixedGains(**fixed))
        if values["preset"]:
            return self.__build("channel", lambda: ChannelModel.from_preset(values["preset"]), "preset")
        return self.__build("channel", lambda: ChannelModel(values["var_pp"], values["var_ps"], values["var_ss"], values["var_sp"]))

    def energy(self) -> EnergySpec:
        return self.__build("energy", lambda: EnergySpec(**self.__values["energy"]))

    def solver_config(self) -> SubgradientConfig:
        values = self.__values["solver"]
        step_dual = values["step_dual"]
        return self.__build("solver", lambda: SubgradientConfig(
            step_power=values["step_power"],
            step_transfer=values["step_transfer"],
            step_mu=step_dual,
            step_lambda=step_dual,
            step_nu=step_dual,
            step_gamma=step_dual,
            step_theta=step_dual,
            epsilon=values["epsilon"],
            max_iters=values["max_iters"],
            log_base_correction=values["log_base_correction"],
            schedule=values["schedule"],
            anneal_after=values["anneal_after"],
            anneal_rate=values["anneal_rate"],
            polish=values["polish"],
            log_stride=values["log_stride"],
            warm_start=values["warm_start"],
        ))

    def sweep_config(self) -> SweepConfig:
        values = self.__values["sweep"]
        if not values["grid"]:
            raise ConfigError("Sweep grid is empty", self.__source, self.line_of("sweep", "grid"))
        params = self.system_params()
        channel = self.channel()
        energy = self.energy()
        solver = self.solver_config()
        return self.__build("sweep", lambda: SweepConfig(
            axis=values["axis"],
            grid=values["grid"],
            params=params,
            channel=channel,
            energy=energy,
            trials=values["trials"],
            seed=values["seed"],
            cooperation=values["cooperation"],
            solver=solver,
            cross_check=self.cross_check,
            workers=self.workers,
        ))

    def oracle_params(self, index: int) -> SystemParams:
        """System parameters of one oracle instance; alpha and b_p are drawn uniformly when [oracle] gives a range."""
        params = self.system_params().replace(n_slots=self.oracle_n_slots)
        values = self.__values["oracle"]
        ranges = dict()
        for name in ("alpha", "b_p"):
            bounds = values[name]
            if bounds is None:
                continue
            if len(bounds) != 2 or bounds[0] > bounds[1]:
                raise ConfigError(f"oracle.{name} must be a (low, high) range, got {bounds}", self.__source, self.line_of("oracle", name))
            ranges[name] = bounds
        if not ranges:
            return params
        rng = trial_rng(self.seed, index, stream=1)
        drawn = {name: float(rng.uniform(low, high)) for name, (low, high) in ranges.items()}
        return self.__build("oracle", lambda: params.replace(**drawn))

    def trace(self, n_slots: Optional[int] = None, trial: int = 0) -> Trace:
        if n_slots is None:
            n_slots = self.system_params().n_slots
        channel = self.channel()
        energy = self.energy()
        try:
            return sample_trace(channel, energy, n_slots, trial_rng(self.seed, trial))
        except ValueError as e:
            raise ConfigError(str(e), self.__source, self.line_of("energy")) from e

    source = property(lambda self: self.__source)
    seed = property(lambda self: self.get("sweep", "seed"))
    trials = property(lambda self: self.get("sweep", "trials"))
    cross_check = property(lambda self: self.get("solver", "cross_check"))
    workers = property(lambda self: self.get("solver", "workers") or None)
    oracle_instances = property(lambda self: self.get("oracle", "instances"))
    oracle_points = property(lambda self: self.get("oracle", "points"))
    oracle_n_slots = property(lambda self: self.get("oracle", "n_slots"))
    csv_path = property(lambda self: self.get("output", "csv") or None)
    plot_data_path = property(lambda self: self.get("output", "plot_data") or None)
    iteration_log_path = property(lambda self: self.get("output", "iteration_log") or None)
