"""JSON experiment configuration: parsing, validation and normalized serialization."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .data import SyntheticSpec
from .fusion import FusionMethod
from .pipeline import ChannelConfig, NoisePlacement, Scheme
from .privacy import SQRT2
from .projection import ProjectionKind

SWEEP_AXES = ("snr_db", "p", "d", "epsilon", "n")


class ConfigSchemaError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class Arm:
    method: FusionMethod
    scheme: Scheme

    @property
    def label(self) -> str:
        if self.scheme is Scheme.BEST_CLIENT:
            return "Best Client"
        suffix = {
            Scheme.OAC: "OAC",
            Scheme.ORTHOGONAL: "Orth",
            Scheme.RR_OAC: "RR-OAC",
            Scheme.RR_ORTHOGONAL: "RR-Orth",
        }[self.scheme]
        return f"{self.method.value.upper()}-{suffix}"


DEFAULT_ARMS = (
    Arm(FusionMethod.BA, Scheme.BEST_CLIENT),
    Arm(FusionMethod.BA, Scheme.ORTHOGONAL),
    Arm(FusionMethod.WBA, Scheme.ORTHOGONAL),
    Arm(FusionMethod.MV, Scheme.ORTHOGONAL),
    Arm(FusionMethod.BA, Scheme.OAC),
    Arm(FusionMethod.WBA, Scheme.OAC),
    Arm(FusionMethod.MV, Scheme.OAC),
)


@dataclass(frozen=True)
class PrivacyConfig:
    delta: float = 1e-5
    sensitivity: float = SQRT2


@dataclass(frozen=True)
class ProjectionConfig:
    kind: ProjectionKind = ProjectionKind.ORTHOGONAL
    seed: int = 0


@dataclass(frozen=True)
class DatasetSource:
    synthetic: SyntheticSpec | None = None
    scores: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 20
    p: float = 1.0
    k: int | None = None
    d: int | None = None
    arms: tuple[Arm, ...] = DEFAULT_ARMS
    noise_placement: NoisePlacement = NoisePlacement.BEFORE_PROJECTION
    epsilon: tuple[float, ...] = (math.inf, 5.0, 1.0)
    privacy: PrivacyConfig = PrivacyConfig()
    projection: ProjectionConfig = ProjectionConfig()
    channel: ChannelConfig = ChannelConfig()
    master_seed: int = 0
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    dataset: DatasetSource = field(default_factory=lambda: DatasetSource(synthetic=SyntheticSpec()))
    sweep: dict = field(default_factory=dict)
    output_dir: str = "results"


# parsing helpers


def _num(value, path, *, integer=False, lo=None, hi=None, lo_open=False, allow_inf=False):
    if isinstance(value, str) and allow_inf and value.lower() == "inf":
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigSchemaError(path, f"expected a number, got {value!r}")
    if integer and (not isinstance(value, int) and not float(value).is_integer()):
        raise ConfigSchemaError(path, f"expected an integer, got {value!r}")
    v = int(value) if integer else float(value)
    if not allow_inf and isinstance(v, float) and not math.isfinite(v):
        raise ConfigSchemaError(path, "must be finite")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigSchemaError(path, f"must be {'>' if lo_open else '>='} {lo}, got {value!r}")
    if hi is not None and v > hi:
        raise ConfigSchemaError(path, f"must be <= {hi}, got {value!r}")
    return v


def _enum(cls, value, path):
    try:
        return cls(value)
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise ConfigSchemaError(path, f"unknown value {value!r} (choose from {choices})") from None


def _obj(value, path, allowed):
    if not isinstance(value, dict):
        raise ConfigSchemaError(path or "<root>", "expected an object")
    for key in value:
        if key not in allowed:
            raise ConfigSchemaError(f"{path}.{key}" if path else key, "unknown key")
    return value


def _list(value, path):
    if not isinstance(value, list) or not value:
        raise ConfigSchemaError(path, "expected a non-empty list")
    return value


def _epsilon(value, path):
    return _num(value, path, lo=0.0, lo_open=True, allow_inf=True)


def _snr(value, path):
    return _num(value, path, allow_inf=True)


_AXIS_PARSERS = {
    "snr_db": _snr,
    "p": lambda v, path: _num(v, path, lo=0.0, lo_open=True, hi=1.0),
    "d": lambda v, path: _num(v, path, integer=True, lo=1),
    "epsilon": _epsilon,
    "n": lambda v, path: _num(v, path, integer=True, lo=1),
}


def parse_axis_value(axis: str, value, path: str):
    if axis not in _AXIS_PARSERS:
        raise ConfigSchemaError(path, f"unknown sweep axis {axis!r}")
    return _AXIS_PARSERS[axis](value, path)


def parse_config(raw: dict) -> ExperimentConfig:
    top = {f.name for f in fields(ExperimentConfig)}
    _obj(raw, "", top)
    kw: dict[str, Any] = {}
    if "n" in raw:
        kw["n"] = _num(raw["n"], "n", integer=True, lo=1)
    if "p" in raw:
        kw["p"] = _AXIS_PARSERS["p"](raw["p"], "p")
    if raw.get("k") is not None:
        kw["k"] = _num(raw["k"], "k", integer=True, lo=2)
    if raw.get("d") is not None:
        kw["d"] = _num(raw["d"], "d", integer=True, lo=1)
    if "arms" in raw:
        arms = []
        for i, a in enumerate(_list(raw["arms"], "arms")):
            path = f"arms[{i}]"
            _obj(a, path, {"method", "scheme"})
            method = _enum(FusionMethod, a.get("method", "ba"), f"{path}.method")
            if "scheme" not in a:
                raise ConfigSchemaError(f"{path}.scheme", "missing")
            scheme = _enum(Scheme, a["scheme"], f"{path}.scheme")
            if scheme in (Scheme.RR_OAC, Scheme.RR_ORTHOGONAL) and method is not FusionMethod.MV:
                raise ConfigSchemaError(f"{path}.method", "randomized-response arms require mv")
            arms.append(Arm(method, scheme))
        kw["arms"] = tuple(arms)
    if "noise_placement" in raw:
        kw["noise_placement"] = _enum(NoisePlacement, raw["noise_placement"], "noise_placement")
    if "epsilon" in raw:
        kw["epsilon"] = tuple(_epsilon(v, f"epsilon[{i}]") for i, v in enumerate(_list(raw["epsilon"], "epsilon")))
    if "privacy" in raw:
        pr = _obj(raw["privacy"], "privacy", {"delta", "sensitivity"})
        kw["privacy"] = PrivacyConfig(
            delta=_num(pr.get("delta", 1e-5), "privacy.delta", lo=0.0, lo_open=True, hi=1.0 - 1e-300),
            sensitivity=_num(pr.get("sensitivity", SQRT2), "privacy.sensitivity", lo=0.0, lo_open=True),
        )
    if "projection" in raw:
        pj = _obj(raw["projection"], "projection", {"kind", "seed"})
        kw["projection"] = ProjectionConfig(
            kind=_enum(ProjectionKind, pj.get("kind", "orthogonal"), "projection.kind"),
            seed=_num(pj.get("seed", 0), "projection.seed", integer=True, lo=0),
        )
    if "channel" in raw:
        c = _obj(raw["channel"], "channel", {"snr_db", "sigma_h", "h_min", "power"})
        kw["channel"] = ChannelConfig(
            snr_db=_snr(c.get("snr_db", 0.0), "channel.snr_db"),
            sigma_h=_num(c.get("sigma_h", 1.0), "channel.sigma_h", lo=0.0, lo_open=True),
            h_min=_num(c.get("h_min", 0.2), "channel.h_min", lo=0.0, lo_open=True),
            power=_num(c.get("power", 1.0), "channel.power", lo=0.0, lo_open=True),
        )
    if "master_seed" in raw:
        kw["master_seed"] = _num(raw["master_seed"], "master_seed", integer=True, lo=0)
    if "seeds" in raw:
        kw["seeds"] = tuple(_num(v, f"seeds[{i}]", integer=True, lo=0) for i, v in enumerate(_list(raw["seeds"], "seeds")))
    if "dataset" in raw:
        kw["dataset"] = _parse_dataset(raw["dataset"])
    if "sweep" in raw:
        sw = _obj(raw["sweep"], "sweep", set(SWEEP_AXES))
        kw["sweep"] = {
            axis: tuple(_AXIS_PARSERS[axis](v, f"sweep.{axis}[{i}]") for i, v in enumerate(_list(vals, f"sweep.{axis}")))
            for axis, vals in sw.items()
        }
    if "output_dir" in raw:
        if not isinstance(raw["output_dir"], str) or not raw["output_dir"]:
            raise ConfigSchemaError("output_dir", "expected a non-empty string")
        kw["output_dir"] = raw["output_dir"]
    cfg = ExperimentConfig(**kw)
    if cfg.k is not None and cfg.d is None:
        cfg = ExperimentConfig(**{**_shallow(cfg), "d": cfg.k})
    return cfg


def _parse_dataset(raw) -> DatasetSource:
    ds = _obj(raw, "dataset", {"synthetic", "scores"})
    if ("synthetic" in ds) == ("scores" in ds):
        raise ConfigSchemaError("dataset", "give exactly one of 'synthetic' or 'scores'")
    if "scores" in ds:
        if not isinstance(ds["scores"], str):
            raise ConfigSchemaError("dataset.scores", "expected a file path")
        return DatasetSource(scores=ds["scores"])
    s = _obj(ds["synthetic"], "dataset.synthetic", {f.name for f in fields(SyntheticSpec)})
    kw = {}
    for name in ("n", "k", "num_samples", "seed"):
        if name in s:
            kw[name] = _num(s[name], f"dataset.synthetic.{name}", integer=True, lo=0)
    if "client_accuracy" in s:
        acc = s["client_accuracy"]
        path = "dataset.synthetic.client_accuracy"
        if isinstance(acc, list):
            kw["client_accuracy"] = tuple(_num(a, f"{path}[{i}]", lo=0.0, lo_open=True, hi=1.0) for i, a in enumerate(acc))
        else:
            kw["client_accuracy"] = _num(acc, path, lo=0.0, lo_open=True, hi=1.0)
    if "dirichlet_blend" in s:
        kw["dirichlet_blend"] = _num(s["dirichlet_blend"], "dataset.synthetic.dirichlet_blend", lo=0.0, hi=1.0)
    spec = SyntheticSpec(**kw)
    if spec.k < 2:
        raise ConfigSchemaError("dataset.synthetic.k", "must be >= 2")
    if spec.num_samples < 10:
        raise ConfigSchemaError("dataset.synthetic.num_samples", "must be >= 10")
    if isinstance(spec.client_accuracy, tuple) and len(spec.client_accuracy) != spec.n:
        raise ConfigSchemaError("dataset.synthetic.client_accuracy", "needs one entry per client")
    return DatasetSource(synthetic=spec)


def _shallow(cfg) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigSchemaError("<root>", f"invalid JSON: {exc}") from None
    return parse_config(raw)


def _num_out(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def to_dict(cfg: ExperimentConfig) -> dict:
    """Normalized JSON-ready form; ``parse_config(to_dict(c)) == c``."""
    ds: dict[str, Any]
    if cfg.dataset.scores is not None:
        ds = {"scores": cfg.dataset.scores}
    else:
        syn = asdict(cfg.dataset.synthetic)
        if isinstance(syn["client_accuracy"], tuple):
            syn["client_accuracy"] = list(syn["client_accuracy"])
        ds = {"synthetic": syn}
    return {
        "n": cfg.n,
        "p": cfg.p,
        "k": cfg.k,
        "d": cfg.d,
        "arms": [{"method": a.method.value, "scheme": a.scheme.value} for a in cfg.arms],
        "noise_placement": cfg.noise_placement.value,
        "epsilon": [_num_out(e) for e in cfg.epsilon],
        "privacy": {"delta": cfg.privacy.delta, "sensitivity": cfg.privacy.sensitivity},
        "projection": {"kind": cfg.projection.kind.value, "seed": cfg.projection.seed},
        "channel": {
            "snr_db": _num_out(cfg.channel.snr_db),
            "sigma_h": cfg.channel.sigma_h,
            "h_min": cfg.channel.h_min,
            "power": cfg.channel.power,
        },
        "master_seed": cfg.master_seed,
        "seeds": list(cfg.seeds),
        "dataset": ds,
        "sweep": {axis: [_num_out(v) for v in vals] for axis, vals in cfg.sweep.items()},
        "output_dir": cfg.output_dir,
    }


def dumps(cfg: ExperimentConfig) -> str:
    return json.dumps(to_dict(cfg), indent=2, sort_keys=True) + "\n"
