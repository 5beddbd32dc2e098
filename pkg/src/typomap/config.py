"""Flat ``key = value`` pipeline configuration with command-line overrides."""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .aligner import DEFAULT_ITERS, DEFAULT_THETA
from .assoc import P_EPSILON
from .kriging import DEFAULT_LEVELS
from .ngrampipe import DEFAULT_STOPWORDS

PATH_KEYS = ("corpus_dir", "metadata", "region", "deps", "gold_dir", "markers", "alignments_dir")


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    source: str = "eng"
    pivot: str = "when"
    stopwords: Tuple[str, ...] = DEFAULT_STOPWORDS
    p_epsilon: float = P_EPSILON
    ngram_min: int = 2
    ngram_max: int = 9
    top_chi2: int = 200
    top_k: int = 20
    dbscan_eps: float = 0.5
    dbscan_min_pts: int = 2
    tfidf_min: int = 1
    tfidf_max: int = 3
    align_iters: int = DEFAULT_ITERS
    align_theta: float = DEFAULT_THETA
    align_chunks: int = 1
    nugget: Optional[float] = None
    psill: Optional[float] = None
    range: Optional[float] = None
    geographic: bool = False
    grid_nx: int = 100
    grid_ny: int = 100
    grid_pad: float = 0.05
    levels: Tuple[float, ...] = DEFAULT_LEVELS
    corpus_dir: str = ""
    metadata: str = ""
    region: str = ""
    deps: str = ""
    gold_dir: str = ""
    markers: str = ""
    alignments_dir: str = ""

    def validate(self) -> "PipelineConfig":
        checks = [
            ("pivot", bool(self.pivot) and self.pivot == self.pivot.lower(), "nonempty lowercase token"),
            ("stopwords", bool(self.stopwords) and all(w == w.lower() for w in self.stopwords),
             "nonempty lowercase list"),
            ("p_epsilon", 0.0 < self.p_epsilon < 1.0, "in (0, 1)"),
            ("ngram_min", 1 <= self.ngram_min <= self.ngram_max, "1 <= ngram_min <= ngram_max"),
            ("top_k", 1 <= self.top_k <= self.top_chi2, "1 <= top_k <= top_chi2"),
            ("dbscan_eps", 0.0 < self.dbscan_eps <= 2.0, "in (0, 2]"),
            ("dbscan_min_pts", self.dbscan_min_pts >= 1, ">= 1"),
            ("tfidf_min", 1 <= self.tfidf_min <= self.tfidf_max, "1 <= tfidf_min <= tfidf_max"),
            ("align_iters", self.align_iters >= 1, ">= 1"),
            ("align_theta", self.align_theta >= 0.0, ">= 0"),
            ("align_chunks", self.align_chunks >= 1, ">= 1"),
            ("nugget", self.nugget is None or self.nugget >= 0, ">= 0"),
            ("psill", self.psill is None or self.psill > 0, "> 0"),
            ("range", self.range is None or self.range > 0, "> 0"),
            ("grid_nx", self.grid_nx >= 2, ">= 2"),
            ("grid_ny", self.grid_ny >= 2, ">= 2"),
            ("grid_pad", self.grid_pad >= 0, ">= 0"),
            ("levels", bool(self.levels) and all(0.0 <= l <= 1.0 for l in self.levels), "values in [0, 1]"),
        ]
        bad = [f"{k} ({why})" for k, ok, why in checks if not ok]
        if bad:
            raise ConfigError("invalid config value: " + ", ".join(bad))
        return self

    def kriging_overrides(self) -> Dict[str, float]:
        return {k: getattr(self, k) for k in ("nugget", "psill", "range") if getattr(self, k) is not None}

    def snapshot(self) -> List[Tuple[str, str]]:
        return [(f.name, format_value(getattr(self, f.name))) for f in dataclasses.fields(self)]


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return ",".join(format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(field_, raw: str):
    name, default = field_.name, field_.default
    raw = raw.strip()
    try:
        if name in ("nugget", "psill", "range"):
            return None if raw == "" else float(raw)
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if name == "levels":
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if name == "stopwords":
            return tuple(x.strip() for x in raw.split(",") if x.strip())
        return raw
    except ValueError:
        raise ConfigError(f"invalid config value: {name} = {raw!r}") from None


def apply(cfg: PipelineConfig, pairs: Sequence[Tuple[str, str]], base_dir: str = "") -> PipelineConfig:
    fields = {f.name: f for f in dataclasses.fields(cfg)}
    for key, raw in pairs:
        key = key.strip().replace("-", "_")
        if key not in fields:
            raise ConfigError(f"unknown config key {key!r}")
        value = _parse(fields[key], raw)
        if key in PATH_KEYS and value and base_dir and not os.path.isabs(value):
            value = os.path.normpath(os.path.join(base_dir, value))
        setattr(cfg, key, value)
    return cfg


def read_pairs(path) -> List[Tuple[str, str]]:
    pairs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            k, v = line.split("=", 1)
            pairs.append((k.strip(), v.strip()))
    return pairs


def load_config(path: Optional[str] = None, overrides: Sequence[str] = ()) -> PipelineConfig:
    """Defaults, then the config file (paths relative to it), then ``key=value`` overrides."""
    cfg = PipelineConfig()
    if path:
        apply(cfg, read_pairs(path), os.path.dirname(os.path.abspath(path)))
    pairs = []
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        pairs.append((k, v))
    apply(cfg, pairs, os.getcwd())
    return cfg.validate()


def write_config(path, cfg: PipelineConfig) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for k, v in cfg.snapshot():
            f.write(f"{k} = {v}\n")
