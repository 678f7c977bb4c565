"""``key = value`` run configuration with sections [phantom], [grids], [acquisition], [recon]."""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .forward import DEFAULT_DELTA2, AcquisitionConfig
from .grids import AngularGrid, ImageGrid, RadonGrid, TimeGrid, next_pow2
from .phantom import Disk, GaussianBump, Phantom, default_phantom

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config"]


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every offending entry."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


_KEYS = {
    "phantom": {"preset", "scale"},
    "grids": {"n_time", "t_max", "detectors", "tail_fraction", "pad_factor", "image_size"},
    "acquisition": {"zero_arc", "delta2", "mask", "smooth_width", "quad_nodes", "antialias_cutoff"},
    "recon": {"mode", "rolloff", "filter_pad", "region", "supersample"},
}

# option names are case-folded, so "T" and "M" arrive as "t" and "m"
_ALIASES = {("grids", "t"): "t_max", ("grids", "m"): "detectors"}


@dataclass
class RunConfig:
    preset: str = "default"
    scale: float = 1.0
    extra: list = field(default_factory=list)
    n_time: int = 256
    t_max: float = 2.0
    detectors: int = 1024
    tail_fraction: float = 0.125
    pad_factor: int = 4
    image_size: int = 512
    zero_arc: tuple[float, float] | None = (190.0, 350.0)
    delta2: float = DEFAULT_DELTA2
    mask: str = "hard"
    smooth_width: float = 5.0
    quad_nodes: int = 48
    antialias_cutoff: float | None = 0.4
    mode: str = "reduced"
    rolloff: float = 0.0
    filter_pad: int = 2
    region: str = "unit_disk"
    supersample: int = 8

    def phantom(self) -> Phantom:
        comps = list(default_phantom().components) if self.preset == "default" else []
        comps += self.extra
        return Phantom(comps).scaled(self.scale)

    def time_grid(self) -> TimeGrid:
        dt = self.t_max / self.n_time
        n_ext = self.n_time + int(round(self.tail_fraction * self.t_max / dt))
        return TimeGrid(self.n_time, dt, 0.0, n_ext, next_pow2(self.pad_factor * n_ext))

    def angular_grid(self) -> AngularGrid:
        return AngularGrid(self.detectors)

    def radon_grid(self) -> RadonGrid:
        return RadonGrid.symmetric(self.detectors, self.t_max / self.n_time, 1.0)

    def image_grid(self) -> ImageGrid:
        return ImageGrid(self.image_size)

    def acquisition(self) -> AcquisitionConfig:
        return AcquisitionConfig(self.delta2, self.zero_arc, self.mask, self.smooth_width)


def _floats(text: str, n: int) -> list[float]:
    vals = [float(x) for x in text.replace(",", " ").split()]
    if len(vals) != n:
        raise ValueError(f"expected {n} numbers")
    return vals


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError([str(e).splitlines()[0]]) from e
    cfg = RunConfig()
    problems: list[str] = []
    for sec in cp.sections():
        if sec not in _KEYS:
            problems.append(f"unknown section [{sec}]")
            continue
        for key, raw in cp.items(sec):
            try:
                _apply(cfg, sec, key, raw.strip())
            except (ValueError, TypeError) as e:
                problems.append(f"[{sec}] {key} = {raw}: {e}")
    if not problems:
        try:
            _validate(cfg)
        except (ValueError, TypeError) as e:
            problems.append(str(e))
    if problems:
        raise ConfigError(problems)
    return cfg


def _apply(cfg: RunConfig, sec: str, key: str, raw: str) -> None:
    if sec == "phantom" and key.startswith(("disk", "bump")) and key[4:].isdigit():
        x, y, w, a = _floats(raw, 4)
        cfg.extra.append(Disk((x, y), w, a) if key.startswith("disk") else GaussianBump((x, y), w, a))
        return
    key = _ALIASES.get((sec, key), key)
    if key not in _KEYS[sec]:
        raise ValueError("unknown key")
    if key in ("preset", "mask", "mode", "region"):
        setattr(cfg, key, raw)
    elif key == "zero_arc":
        cfg.zero_arc = None if raw.lower() == "none" else tuple(_floats(raw, 2))
    elif key == "antialias_cutoff":
        cfg.antialias_cutoff = None if raw.lower() == "none" else float(raw)
    elif key in ("n_time", "detectors", "pad_factor", "image_size", "quad_nodes", "filter_pad", "supersample"):
        setattr(cfg, key, int(raw))
    else:
        setattr(cfg, key, float(raw))


def _validate(cfg: RunConfig) -> None:
    if cfg.preset not in ("default", "empty"):
        raise ValueError(f"[phantom] preset must be 'default' or 'empty', got {cfg.preset!r}")
    if cfg.mode not in ("full", "reduced", "naive"):
        raise ValueError(f"[recon] mode must be full, reduced or naive, got {cfg.mode!r}")
    if not np.isfinite(cfg.delta2) or cfg.delta2 <= 0:
        raise ValueError("[acquisition] delta2 must be positive")
    cfg.phantom()
    cfg.time_grid()
    cfg.angular_grid()
    cfg.acquisition()


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    return parse_config(Path(path).read_text(encoding="utf-8"))
