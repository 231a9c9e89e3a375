"""Run configuration and its flat ``key = value`` text format."""

from dataclasses import dataclass, fields, replace


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    window_u: int = 25
    window_v: int = 25
    feature_dim: int = 64
    dk: int = 0  # 0 -> derived from feature_dim and mode
    dv: int = 0  # 0 -> feature_dim // 2
    memory_every: int = 5
    mode: str = "learned"
    softargmin_sign: int = 1
    softargmin_beta: float = 400.0
    bootstrap_ratio: float = 0.4
    lam: float = 1.0
    seed: int = 0
    boundary_tolerance_fraction: float = 0.008
    # analytic mode only
    match_position_weight: float = 0.25
    key_position_weight: float = 0.05
    key_sharpness: float = 400.0
    decode_slope: float = 20.0

    def __post_init__(self):
        if self.window_u < 1 or self.window_v < 1 or self.window_u % 2 == 0 or self.window_v % 2 == 0:
            raise ConfigError(f"windows must be odd and positive, got {self.window_u}x{self.window_v}")
        if self.feature_dim < 16 or self.feature_dim % 16:
            raise ConfigError(f"feature_dim must be a positive multiple of 16, got {self.feature_dim}")
        if self.dk < 0 or self.dv < 0 or self.memory_every < 1:
            raise ConfigError("dk, dv must be non-negative and memory_every positive")
        if self.mode not in ("learned", "analytic"):
            raise ConfigError(f"mode must be 'learned' or 'analytic', got {self.mode!r}")
        if self.softargmin_sign not in (1, -1):
            raise ConfigError("softargmin_sign must be +1 or -1")
        if self.softargmin_beta <= 0 or self.key_sharpness <= 0 or self.decode_slope <= 0:
            raise ConfigError("softargmin_beta, key_sharpness and decode_slope must be positive")
        if not 0.0 < self.bootstrap_ratio <= 1.0:
            raise ConfigError(f"bootstrap_ratio must be in (0, 1], got {self.bootstrap_ratio}")
        if not 0.0 < self.boundary_tolerance_fraction <= 1.0:
            raise ConfigError("boundary_tolerance_fraction must be in (0, 1]")
        if self.lam < 0 or self.match_position_weight < 0 or self.key_position_weight < 0:
            raise ConfigError("lam and position weights must be non-negative")

    @property
    def window(self):
        return self.window_u, self.window_v

    @property
    def key_dim(self):
        if self.dk:
            return self.dk
        # analytic keys carry the four colour statistics
        return self.feature_dim // 4 if self.mode == "analytic" else self.feature_dim // 8

    @property
    def value_dim(self):
        return self.dv or self.feature_dim // 2

    def replace(self, **changes):
        return replace(self, **changes)


# config-file spelling differs only where the field name is a Python keyword
_FILE_KEYS = {"lam": "lambda"}
_FIELDS = {_FILE_KEYS.get(f.name, f.name): f for f in fields(RunConfig)}


def serialize_config(cfg):
    return "".join(f"{key} = {getattr(cfg, f.name)}\n" for key, f in _FIELDS.items())


def parse_config(text):
    """Parse ``key = value`` lines; blank lines and ``#`` comments are ignored."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if _FIELDS[key].name in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[_FIELDS[key].name] = _FIELDS[key].type(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value {value!r} for {key}") from None
    return RunConfig(**values)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
