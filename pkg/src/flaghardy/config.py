"""Run configuration: plain key=value text with JSON overrides.

Every constant the construction prints (enlargement threshold 1/100,
majority 1/2, dilation 6, maximal cutoff 1/4) is surfaced here rather than
hard-coded, so experiments can vary them.  Configurations round-trip
through canonical JSON bit-exactly and carry a content hash that reports
embed.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .atoms import DecompositionConfig
from .grid import Grid, SignalSpec, make_grid
from .maximal import MaximalConfig
from .storage import canonical_json, read_json, sha256_of


class ConfigError(ValueError):
    """Unusable configuration value or file."""


@dataclass(frozen=True)
class RunConfig:
    n: int = 1
    m: int = 1
    L: int = 7
    side: float = 1.0
    profile: str = "meyer-smooth"
    j_range: tuple[int, int] | None = None  # None: [0, L-2]
    k_range: tuple[int, int] | None = None
    p_list: tuple[float, ...] = (0.6, 0.8, 1.0)
    corpus: str = "default10"
    enlargement: float = 1.0 / 100.0
    majority: float = 0.5
    dilation: float = 6.0
    hl_cutoff: float = 0.25
    max_levels: int = 32
    maximal_family: str = "dyadic"
    seed: int = 7
    out_dir: str = "runs/out"
    figures: bool = True
    lift_samples: int = 20
    particle_dumps: int = 4

    def grid(self) -> Grid:
        try:
            return make_grid(self.n, self.m, self.L, self.side)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def ranges(self) -> tuple[tuple[int, int], tuple[int, int]]:
        top = self.L - 2
        j = self.j_range if self.j_range is not None else (0, top)
        k = self.k_range if self.k_range is not None else (0, top)
        return tuple(j), tuple(k)

    def decomposition_config(self) -> DecompositionConfig:
        return DecompositionConfig(
            enlargement_threshold=self.enlargement,
            majority=self.majority,
            dilation=self.dilation,
            hl_cutoff=self.hl_cutoff,
            max_levels=self.max_levels,
            maximal=MaximalConfig(family=self.maximal_family),
        )

    def validate(self) -> "RunConfig":
        if self.profile not in ("meyer-smooth", "shannon-sharp"):
            raise ConfigError(f"unknown profile {self.profile!r}")
        for p in self.p_list:
            if not (0 < p <= 1 or p == 2):
                raise ConfigError(f"exponent {p} outside (0,1] (2 allowed only as sanity mode)")
        for name in ("enlargement", "majority", "hl_cutoff"):
            v = getattr(self, name)
            if not (0 < v <= 1):
                raise ConfigError(f"threshold {name}={v} outside (0,1]")
        if self.dilation <= 0:
            raise ConfigError(f"dilation must be positive, got {self.dilation}")
        self.grid()
        jr, kr = self.ranges()
        if jr[0] > jr[1] or kr[0] > kr[1]:
            raise ConfigError(f"empty scale ranges {jr}, {kr}")
        return self

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "m": self.m,
            "L": self.L,
            "side": self.side,
            "profile": self.profile,
            "j_range": list(self.j_range) if self.j_range else None,
            "k_range": list(self.k_range) if self.k_range else None,
            "p_list": list(self.p_list),
            "corpus": self.corpus,
            "enlargement": self.enlargement,
            "majority": self.majority,
            "dilation": self.dilation,
            "hl_cutoff": self.hl_cutoff,
            "max_levels": self.max_levels,
            "maximal_family": self.maximal_family,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "figures": self.figures,
            "lift_samples": self.lift_samples,
            "particle_dumps": self.particle_dumps,
        }
        return d

    def config_hash(self) -> str:
        return sha256_of(canonical_json(self.to_dict()))

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        known = dict(d)
        for key in ("j_range", "k_range"):
            if known.get(key) is not None:
                known[key] = tuple(known[key])
        if "p_list" in known and known["p_list"] is not None:
            known["p_list"] = tuple(known["p_list"])
        try:
            return RunConfig(**known)
        except TypeError as e:
            raise ConfigError(f"bad config key: {e}") from e


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_scalar(key: str, raw: str):
    raw = raw.strip()
    if key in ("n", "m", "L", "max_levels", "seed", "lift_samples", "particle_dumps"):
        return int(raw)
    if key in ("side", "enlargement", "majority", "dilation", "hl_cutoff"):
        return _parse_fraction(raw)
    if key == "figures":
        if raw.lower() not in _BOOL:
            raise ConfigError(f"boolean expected for {key}, got {raw!r}")
        return _BOOL[raw.lower()]
    if key in ("j_range", "k_range"):
        lo, hi = raw.split(":")
        return (int(lo), int(hi))
    if key == "p_list":
        return tuple(float(t) for t in raw.split(",") if t.strip())
    return raw


def _parse_fraction(raw: str) -> float:
    if "/" in raw:
        num, den = raw.split("/")
        return float(num) / float(den)
    return float(raw)


_TEXT_KEYS = {
    "grid.n": "n",
    "grid.m": "m",
    "grid.L": "L",
    "grid.side": "side",
    "bank.profile": "profile",
    "bank.j_range": "j_range",
    "bank.k_range": "k_range",
    "p": "p_list",
    "corpus": "corpus",
    "thresholds.enlargement": "enlargement",
    "thresholds.majority": "majority",
    "thresholds.dilation": "dilation",
    "thresholds.hl_cutoff": "hl_cutoff",
    "max_levels": "max_levels",
    "maximal.family": "maximal_family",
    "seed": "seed",
    "out": "out_dir",
    "figures": "figures",
    "lift_samples": "lift_samples",
    "particle_dumps": "particle_dumps",
}


def parse_text_config(text: str) -> dict:
    """key = value lines; '#' comments; nested keys use dots."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (t.strip() for t in stripped.split("=", 1))
        if key not in _TEXT_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        field_name = _TEXT_KEYS[key]
        out[field_name] = _parse_scalar(field_name, raw)
    return out


def load_config(
    text_path: str | Path | None = None,
    json_path: str | Path | None = None,
    overrides: dict | None = None,
) -> RunConfig:
    """Defaults <- key=value file <- JSON file <- explicit overrides."""
    data: dict = {}
    if text_path is not None:
        p = Path(text_path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        if p.suffix == ".json":
            data.update(read_json(p))
        else:
            data.update(parse_text_config(p.read_text()))
    if json_path is not None:
        p = Path(json_path)
        if not p.exists():
            raise ConfigError(f"config override not found: {p}")
        data.update(read_json(p))
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    base = RunConfig.from_dict(data) if data else RunConfig()
    return base.validate()


def default_corpus(cfg: RunConfig) -> list[SignalSpec]:
    """Ten-signal corpus spanning bumps, oscillations, noise, and plateaus."""
    if cfg.corpus != "default10":
        raise ConfigError(f"unknown corpus {cfg.corpus!r}")
    side = cfg.side
    N = 1 << cfg.L
    c = side / 2
    osc = max(4, N // 8)
    return [
        SignalSpec("gaussian-bump", center=(c,) * (cfg.n + cfg.m), widths=(side / 8,) * (cfg.n + cfg.m)),
        SignalSpec(
            "gaussian-bump",
            center=(0.4 * side,) * cfg.n + (0.6 * side,) * cfg.m,
            widths=(side / 16,) * cfg.n + (side / 10,) * cfg.m,
        ),
        SignalSpec("tensor-oscillation", center=(c,) * (cfg.n + cfg.m), widths=(side / 8,) * (cfg.n + cfg.m), frequency=(osc,) * (cfg.n + cfg.m)),
        SignalSpec(
            "tensor-oscillation",
            center=(c,) * (cfg.n + cfg.m),
            widths=(side / 6,) * (cfg.n + cfg.m),
            frequency=(osc // 2,) * cfg.n + (osc,) * cfg.m,
        ),
        SignalSpec("band-limited-random", seed=cfg.seed),
        SignalSpec("band-limited-random", seed=cfg.seed + 1),
        SignalSpec("band-limited-random", seed=cfg.seed + 2, frequency=(N / 8, N / 3)),
        SignalSpec("indicator-smooth", center=(c,) * (cfg.n + cfg.m), widths=(side / 3,) * (cfg.n + cfg.m)),
        SignalSpec(
            "indicator-smooth",
            center=(0.35 * side,) * (cfg.n + cfg.m),
            widths=(side / 5,) * cfg.n + (side / 4,) * cfg.m,
        ),
        SignalSpec("delta", center=(c,) * (cfg.n + cfg.m)),
    ]
