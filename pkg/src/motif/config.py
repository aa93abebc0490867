import os
from dataclasses import asdict, dataclass, field, fields

from .affordance import DenoiseConfig
from .errors import ConfigError
from .io import load_json
from .lda import DEFAULT_RIDGE_SCALE
from .projection import DEFAULT_DEPTH_TOLERANCE
from .wire import FrameStreamConfig

ENV_VAR = "MOTIF_CONFIG"


def _strict(cls, d, section):
    if not isinstance(d, dict):
        raise ConfigError(f"section {section!r} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")
    return cls(**d)


@dataclass(frozen=True)
class LdaConfig:
    ridge_scale: float = DEFAULT_RIDGE_SCALE
    # divisor for per-axis standard deviation features: "n" or "n-1"
    std_divisor: str = "n"

    def __post_init__(self):
        if self.std_divisor not in ("n", "n-1"):
            raise ConfigError("std_divisor must be 'n' or 'n-1'")
        if self.ridge_scale < 0:
            raise ConfigError("ridge_scale must be non-negative")

    @property
    def ddof(self):
        return 0 if self.std_divisor == "n" else 1


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 42
    trials: int = 50
    noise_scale: float = 1.0


@dataclass(frozen=True)
class ThermalConfig:
    depth_tolerance: float = DEFAULT_DEPTH_TOLERANCE
    hot_threshold: float = 0.0
    safety_radius: float = 0.02


@dataclass(frozen=True)
class PipelineConfig:
    denoise: DenoiseConfig = field(default_factory=DenoiseConfig)
    stream: FrameStreamConfig = field(default_factory=FrameStreamConfig)
    lda: LdaConfig = field(default_factory=LdaConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    thermal: ThermalConfig = field(default_factory=ThermalConfig)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        try:
            return cls(
                denoise=DenoiseConfig.from_dict(d.get("denoise", {})),
                stream=_strict(FrameStreamConfig, d.get("stream", {}), "stream"),
                lda=_strict(LdaConfig, d.get("lda", {}), "lda"),
                synth=_strict(SynthConfig, d.get("synth", {}), "synth"),
                thermal=_strict(ThermalConfig, d.get("thermal", {}), "thermal"),
            )
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self):
        d = asdict(self)
        d["denoise"] = self.denoise.to_dict()
        return d


def load_config(path=None):
    """Config from ``path``, else from $MOTIF_CONFIG, else defaults."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return PipelineConfig()
    return PipelineConfig.from_dict(load_json(path))
