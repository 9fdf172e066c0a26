"""Scenario configuration: a single TOML file describing the model (by
catalog name or inline expressions), grid, lambda schedule, solver
tolerances, dynamics settings and output options."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .exprs import compile_expression
from .grid import Circle, Interval, TruncatedLine
from .model import (AtInfinity, AttainedAt, CatalogModel, DeathRate, General,
                    Hoelder, Kernel, Lipschitz, LowerBoundMeta, catalog_by_name)

MIN_GRID_N = 16


@dataclass
class ScenarioConfig:
    name: str
    model: CatalogModel
    n: int
    rule: str
    lambda_count: int = 50
    left_offset_floor: float = 1e-8
    lambda_samples: Optional[list] = None
    tol_lambda: Optional[float] = None
    tol_spr: float = 1e-9
    margin: float = 1e-6
    cap: float = 1e6
    power_tol: float = 1e-10
    t_end: Optional[float] = None
    dt: Optional[float] = None
    u0_expr: str = "1"
    stride: int = 10
    tail_fraction: float = 0.5
    out_dir: str = "out"
    formats: tuple = ("csv", "json")
    seed: int = 0
    truncation_sweep: bool = True


def _domain_from_table(table):
    shape = table.get("shape")
    if shape == "interval":
        return Interval(float(table["lo"]), float(table["hi"]))
    if shape == "circle":
        return Circle(float(table.get("circumference", 2 * 3.141592653589793)))
    if shape == "truncated_line":
        return TruncatedLine(float(table["half_width"]))
    raise ConfigError(f"unknown domain shape {shape!r}", key="model.domain.shape")


def _inline_model(mt, name):
    try:
        kernel_expr = mt["kernel"]
        a_expr = mt["a"]
        domain = _domain_from_table(mt["domain"])
        inf_value = float(mt["a_inf"])
        sup_value = float(mt["a_sup"])
    except KeyError as exc:
        raise ConfigError(f"missing required key {exc}", key="model") from None

    lower = None
    if "epsilon" in mt or "delta" in mt:
        try:
            region = tuple(float(v) for v in mt.get("region", (-mt["delta"], mt["delta"])))
            lower = LowerBoundMeta(float(mt["epsilon"]), float(mt["delta"]), region)
        except KeyError as exc:
            raise ConfigError(f"epsilon/delta must both be given ({exc})", key="model")

    kernel = Kernel(compile_expression(kernel_expr, ("x", "y")), General(),
                    symmetric=bool(mt.get("symmetric", False)), lower_bound=lower)

    if mt.get("a_inf_at_infinity", False):
        loc = AtInfinity()
    else:
        loc = AttainedAt(float(mt.get("a_inf_attained_at", 0.0)))
    regularity = None
    if "lipschitz" in mt:
        regularity = Lipschitz(float(mt["lipschitz"]))
    elif "hoelder_alpha" in mt:
        regularity = Hoelder(float(mt["hoelder_alpha"]), float(mt["hoelder_coeff"]))
    a = DeathRate(compile_expression(a_expr, ("x",)), inf_value=inf_value,
                  sup_value=sup_value, inf_location=loc, regularity=regularity)

    expected = mt.get("expected", "unknown")
    if expected not in ("eigenvalue_exists", "no_eigenvalue", "unknown"):
        raise ConfigError(f"bad expected value {expected!r}", key="model.expected")
    return CatalogModel(name=name, kernel=kernel, death_rate=a, domain=domain,
                        expected=expected, grid_n=MIN_GRID_N)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None

    mt = data.get("model", {})
    if "name" in mt:
        catalog = catalog_by_name()
        if mt["name"] not in catalog:
            raise ConfigError(f"unknown catalog model {mt['name']!r}", key="model.name")
        model = catalog[mt["name"]]
    elif "kernel" in mt:
        model = _inline_model(mt, name=data.get("name", path.stem))
    else:
        raise ConfigError("model table needs either 'name' or inline 'kernel'/'a'",
                          key="model")

    gt = data.get("grid", {})
    n = int(gt.get("n", model.grid_n))
    if n < MIN_GRID_N:
        raise ConfigError(f"grid n must be at least {MIN_GRID_N}, got {n}", key="grid.n")
    rule = gt.get("rule", model.grid_rule)
    if "truncation" in gt:
        if not isinstance(model.domain, TruncatedLine):
            raise ConfigError("truncation only applies to truncated_line domains",
                              key="grid.truncation")
        from dataclasses import replace
        model = replace(model, domain=TruncatedLine(float(gt["truncation"])))

    st = data.get("lambda_schedule", {})
    lt = data.get("solver", {})
    dyn = data.get("dynamics", {})
    ot = data.get("outputs", {})

    for key, tab, name_ in (("tol_spr", lt, "solver.tol_spr"),
                            ("tol_lambda", lt, "solver.tol_lambda")):
        if key in tab and not float(tab[key]) > 0:
            raise ConfigError("tolerance must be positive", key=name_)

    cfg = ScenarioConfig(
        name=data.get("name", model.name),
        model=model,
        n=n,
        rule=rule,
        lambda_count=int(st.get("count", 50)),
        left_offset_floor=float(st.get("left_offset_floor", 1e-8)),
        lambda_samples=list(st["samples"]) if "samples" in st else None,
        tol_lambda=float(lt["tol_lambda"]) if "tol_lambda" in lt else None,
        tol_spr=float(lt.get("tol_spr", 1e-9)),
        margin=float(lt.get("margin", 1e-6)),
        cap=float(lt.get("cap", 1e6)),
        power_tol=float(lt.get("power_tol", 1e-10)),
        t_end=float(dyn["t_end"]) if "t_end" in dyn else None,
        dt=float(dyn["dt"]) if "dt" in dyn else None,
        u0_expr=dyn.get("u0", "1"),
        stride=int(dyn.get("stride", 10)),
        tail_fraction=float(dyn.get("tail_fraction", 0.5)),
        out_dir=ot.get("directory", "out"),
        formats=tuple(ot.get("formats", ("csv", "json"))),
        seed=int(data.get("seed", 0)),
        truncation_sweep=bool(data.get("truncation_sweep", True)),
    )
    if not 0 < cfg.tail_fraction < 1:
        raise ConfigError("tail_fraction must lie in (0, 1)", key="dynamics.tail_fraction")
    return cfg
