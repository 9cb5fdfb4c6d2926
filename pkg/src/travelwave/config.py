"""Run configuration files.

A config is a flat list of ``key = value`` lines (``#`` starts a comment)::

    family = cubic
    s0 = 0.3
    p = 2
    tol_c = 1e-10
    sweep_s0 = 0.15, 0.3, 0.45

See the README for the full key list.
"""

from __future__ import annotations

import configparser
import itertools
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .families import alpha_bistable, cubic, double_well, tabulated, user_exponents
from .problem import ProblemSpec, build_problem

FAMILY_PARAMS = {
    "cubic": ("s0",),
    "double_well": ("alpha",),
    "alpha_bistable": ("alpha", "s0"),
    "tabulated": ("table_path",),
    "manufactured": ("kappa", "a", "b", "c"),
}
EXPONENT_KEYS = ("gamma_minus", "gamma0_minus", "gamma_plus", "gamma0_plus")
GENERAL_KEYS = {"family", "p", "diffusion", "tol_c", "tol_ode", "tol_quad", "samples",
                "anchor_x0", "output_dir", *EXPONENT_KEYS}
SWEEPABLE = {"p", "s0", "alpha", "kappa", "a", "b", "c"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    family: str
    params: dict
    p: float = 2.0
    diffusion: Optional[str] = None
    exponents: Optional[tuple] = None
    tol_c: float = 1e-10
    tol_ode: float = 1e-10
    tol_quad: float = 1e-12
    samples: int = 2048
    anchor_x0: float = 0.0
    sweep: dict = field(default_factory=dict)
    output_dir: Optional[str] = None
    base_dir: Path = Path(".")

    def instances(self) -> list[tuple[str, "RunConfig"]]:
        """(name, config) for every point of the sweep grid; one entry without a sweep."""
        if not self.sweep:
            return [("", self)]
        keys = sorted(self.sweep)
        out = []
        for values in itertools.product(*(self.sweep[k] for k in keys)):
            cfg = self
            for k, v in zip(keys, values):
                cfg = replace(cfg, p=v) if k == "p" else replace(cfg, params={**cfg.params, k: v})
            name = "_".join(f"{k}={v:g}" for k, v in zip(keys, values))
            out.append((name, replace(cfg, sweep={})))
        return out


def _float(key, text) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{key}: must be finite")
    return v


def parse_config(text: str, base_dir: Path = Path(".")) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    raw = dict(parser["run"])

    family = raw.pop("family", None)
    if family not in FAMILY_PARAMS:
        raise ConfigError(f"family must be one of {sorted(FAMILY_PARAMS)}, got {family!r}")

    sweep = {}
    for key in [k for k in raw if k.startswith("sweep_")]:
        name = key[len("sweep_"):]
        if name not in SWEEPABLE:
            raise ConfigError(f"cannot sweep {name!r}")
        values = [_float(key, v) for v in raw.pop(key).split(",") if v.strip()]
        if not values:
            raise ConfigError(f"{key}: sweep grid is empty")
        sweep[name] = values

    params = {}
    for name in FAMILY_PARAMS[family]:
        if name in raw:
            text = raw.pop(name)
            params[name] = text.strip() if name == "table_path" else _float(name, text)
        elif name not in sweep:
            raise ConfigError(f"family {family!r} needs {name!r}")

    unknown = set(raw) - GENERAL_KEYS
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")

    exps = [k for k in EXPONENT_KEYS if k in raw]
    exponents = None
    if exps:
        if len(exps) != 4:
            raise ConfigError(f"give all of {', '.join(EXPONENT_KEYS)} or none")
        exponents = tuple(_float(k, raw[k]) for k in EXPONENT_KEYS)

    cfg = RunConfig(
        family=family,
        params=params,
        p=_float("p", raw.get("p", "2")),
        diffusion=raw.get("diffusion"),
        exponents=exponents,
        tol_c=_float("tol_c", raw.get("tol_c", "1e-10")),
        tol_ode=_float("tol_ode", raw.get("tol_ode", "1e-10")),
        tol_quad=_float("tol_quad", raw.get("tol_quad", "1e-12")),
        samples=int(_float("samples", raw.get("samples", "2048"))),
        anchor_x0=_float("anchor_x0", raw.get("anchor_x0", "0")),
        sweep=sweep,
        output_dir=raw.get("output_dir"),
        base_dir=base_dir,
    )
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    for name in ("tol_c", "tol_ode", "tol_quad"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be positive")
    if cfg.samples < 16:
        raise ConfigError("samples must be at least 16")
    ps = cfg.sweep.get("p", [cfg.p])
    if any(not p > 1 for p in ps):
        raise ConfigError("p must exceed 1")
    if cfg.diffusion is not None:
        parse_diffusion(cfg.diffusion)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, path.parent)


def parse_diffusion(text: str):
    """``constant:v`` gives d = v; ``quadratic:a`` gives d(r) = 1 + a r^2."""
    kind, _, arg = text.partition(":")
    kind = kind.strip()
    value = _float("diffusion", arg)
    if kind == "constant":
        return value
    if kind == "quadratic":
        return lambda r: 1.0 + value * r * r
    raise ConfigError(f"diffusion must be constant:<v> or quadratic:<a>, got {text!r}")


def build_spec(cfg: RunConfig) -> ProblemSpec:
    """Problem for one (non-sweep) config.  Raises HypothesisViolation on bad data."""
    if cfg.sweep:
        raise ConfigError("expand the sweep with instances() first")
    pr = cfg.params
    d = 1.0 if cfg.diffusion is None else parse_diffusion(cfg.diffusion)
    if cfg.family == "cubic":
        spec = cubic(pr["s0"], p=cfg.p, diffusion=d)
    elif cfg.family == "double_well":
        spec = double_well(pr["alpha"], p=cfg.p, diffusion=d)
    elif cfg.family == "alpha_bistable":
        spec = alpha_bistable(pr["alpha"], pr["s0"], p=cfg.p, diffusion=d)
    elif cfg.family == "tabulated":
        path = Path(pr["table_path"])
        if not path.is_absolute():
            path = cfg.base_dir / path
        if not path.exists():
            raise ConfigError(f"table file {path} not found")
        try:
            spec = tabulated(path, p=cfg.p)
        except ValueError as exc:
            if isinstance(exc, ConfigError) or type(exc) is ValueError:
                raise ConfigError(str(exc)) from None
            raise
        if cfg.diffusion is not None:
            spec = build_problem(cfg.p, d, spec.reaction, label=spec.label)
    else:
        from .harness import manufactured_problem

        if cfg.diffusion is not None:
            raise ConfigError("manufactured problems use unit diffusion")
        if not (pr["kappa"] > 0 and pr["a"] > 1 and pr["b"] > 1 and pr["c"] < 0):
            raise ConfigError("manufactured needs kappa > 0, a > 1, b > 1, c < 0")
        spec = manufactured_problem(pr["kappa"], pr["a"], pr["b"], pr["c"], cfg.p).spec
    if cfg.exponents is not None:
        try:
            spec = spec.with_exponents(user_exponents(*cfg.exponents))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return spec
