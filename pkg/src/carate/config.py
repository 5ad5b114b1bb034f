"""Config-file parsing and validation.

Configs are INI-style text files with one section per module.  Unknown
sections or keys are hard errors (silent typos corrupt studies), and error
messages carry the offending line number where one can be found.

    [population]
    dgp = dgp1              # one id or a comma list

    [strata]
    builtin = 5             # or: breakpoints = -0.6,-0.2,0.2,0.6

    [proportions]
    mode = constant         # constant | varying
    # or: constant = 0.5    # same share in every stratum
    # or: pi = 0.3,0.4,0.5,0.6,0.7

    [assignment]
    mechanism = spbr        # spbr | ssra

    [crossfit]
    folds = 2
    # c_k = 0.577           # bandwidth constant; defaults by dimension
    kernel = uniform

    [estimators]
    propensity = true_pi    # true_pi | sample_proportions

    [harness]
    n_grid = 500,1000,2000,4000,8000
    reps = 5000
    seed = 1729
    jobs = 1                # or -1 for all cores; default from CARATE_JOBS
    bound_draws = 1000000
"""
from __future__ import annotations

import configparser
import os
import re
from pathlib import Path

from . import assignment as asg
from . import estimators as est
from .harness import DEFAULT_N_GRID, SimConfig
from .population import make_dgp

__all__ = ["ConfigError", "load_config", "JOBS_ENV_VAR"]

JOBS_ENV_VAR = "CARATE_JOBS"

_SCHEMA = {
    "population": {"dgp"},
    "strata": {"builtin", "breakpoints"},
    "proportions": {"mode", "constant", "pi"},
    "assignment": {"mechanism"},
    "crossfit": {"folds", "c_k", "kernel"},
    "estimators": {"propensity"},
    "harness": {"n_grid", "reps", "seed", "jobs", "bound_draws"},
}


class ConfigError(Exception):
    """Invalid configuration; carries the file path and line when known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(prefix + message)


class _Source:
    """Raw config text plus helpers to locate keys/sections for error lines."""

    def __init__(self, path: str, text: str):
        self.path = path
        self.lines = text.splitlines()

    def line_of(self, pattern: str) -> int | None:
        rx = re.compile(pattern)
        for i, line in enumerate(self.lines, start=1):
            if rx.match(line):
                return i
        return None

    def key_line(self, key: str) -> int | None:
        return self.line_of(rf"\s*{re.escape(key)}\s*[=:]")

    def section_line(self, section: str) -> int | None:
        return self.line_of(rf"\s*\[{re.escape(section)}\]")


def _split_list(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


def _parse_int(src: _Source, key: str, raw: str, minimum: int | None = None) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"key '{key}' must be an integer, got {raw!r}",
                          src.path, src.key_line(key)) from None
    if minimum is not None and value < minimum:
        raise ConfigError(f"key '{key}' must be >= {minimum}, got {value}",
                          src.path, src.key_line(key))
    return value


def _parse_float(src: _Source, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key '{key}' must be a number, got {raw!r}",
                          src.path, src.key_line(key)) from None


def load_config(path) -> SimConfig:
    """Parse and validate a config file into a :class:`SimConfig`."""
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", path) from None
    src = _Source(path, text)

    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigError(f"cannot parse config: {exc.message}", path, line) from None

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", path, src.section_line(section))
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]",
                                  path, src.key_line(key))

    def get(section: str, key: str, default: str | None = None) -> str | None:
        if parser.has_option(section, key):
            return parser.get(section, key).strip()
        return default

    # [population]
    raw_dgp = get("population", "dgp")
    if not raw_dgp:
        raise ConfigError("missing required key 'dgp' in [population]",
                          path, src.section_line("population"))
    dgps = tuple(name.lower() for name in _split_list(raw_dgp))
    for name in dgps:
        try:
            make_dgp(name)
        except ValueError as exc:
            raise ConfigError(str(exc), path, src.key_line("dgp")) from None

    # [strata]
    raw_builtin = get("strata", "builtin")
    raw_breaks = get("strata", "breakpoints")
    if raw_builtin is not None and raw_breaks is not None:
        raise ConfigError("give either 'builtin' or 'breakpoints' in [strata], not both",
                          path, src.key_line("breakpoints"))
    breakpoints = None
    if raw_breaks is not None:
        try:
            breakpoints = tuple(float(v) for v in _split_list(raw_breaks))
        except ValueError:
            raise ConfigError("key 'breakpoints' must be a comma list of numbers",
                              path, src.key_line("breakpoints")) from None
        if len(breakpoints) < 1:
            raise ConfigError("key 'breakpoints' must be nonempty", path, src.key_line("breakpoints"))
        if any(b <= a for a, b in zip(breakpoints, breakpoints[1:])):
            raise ConfigError("breakpoints must be strictly increasing",
                              path, src.key_line("breakpoints"))
        num_strata = len(breakpoints) + 1
    else:
        num_strata = _parse_int(src, "builtin", raw_builtin or "5")
        if num_strata not in (5, 20):
            raise ConfigError(f"builtin strata sizes are 5 and 20, got {num_strata}",
                              path, src.key_line("builtin"))

    # [proportions]
    prop_keys = [k for k in ("mode", "constant", "pi") if get("proportions", k) is not None]
    if len(prop_keys) > 1:
        raise ConfigError("give exactly one of 'mode', 'constant' or 'pi' in [proportions]",
                          path, src.key_line(prop_keys[1]))
    proportions: str | tuple[float, ...]
    if not prop_keys or prop_keys[0] == "mode":
        mode = get("proportions", "mode", "constant")
        if mode not in ("constant", "varying"):
            raise ConfigError(f"proportions mode must be constant or varying, got {mode!r}",
                              path, src.key_line("mode"))
        if mode == "varying" and breakpoints is not None:
            raise ConfigError("varying proportions are only defined for builtin strata",
                              path, src.key_line("mode"))
        proportions = mode
    elif prop_keys[0] == "constant":
        p = _parse_float(src, "constant", get("proportions", "constant"))
        if not 0.0 < p < 1.0:
            raise ConfigError("constant proportion must lie strictly in (0, 1)",
                              path, src.key_line("constant"))
        proportions = (p,) * num_strata
    else:
        try:
            vec = tuple(float(v) for v in _split_list(get("proportions", "pi")))
        except ValueError:
            raise ConfigError("key 'pi' must be a comma list of numbers",
                              path, src.key_line("pi")) from None
        if len(vec) != num_strata:
            raise ConfigError(f"'pi' has {len(vec)} entries but there are {num_strata} strata",
                              path, src.key_line("pi"))
        if any(not 0.0 < p < 1.0 for p in vec):
            raise ConfigError("every 'pi' entry must lie strictly in (0, 1)",
                              path, src.key_line("pi"))
        proportions = vec

    # [assignment]
    mechanism = get("assignment", "mechanism", asg.SPBR).lower()
    if mechanism not in asg.MECHANISMS:
        raise ConfigError(f"mechanism must be one of {asg.MECHANISMS}, got {mechanism!r}",
                          path, src.key_line("mechanism"))

    # [crossfit]
    folds = _parse_int(src, "folds", get("crossfit", "folds", "2"), minimum=2)
    raw_ck = get("crossfit", "c_k")
    bandwidth_const = None
    if raw_ck is not None:
        bandwidth_const = _parse_float(src, "c_k", raw_ck)
        if bandwidth_const <= 0:
            raise ConfigError("key 'c_k' must be positive", path, src.key_line("c_k"))
    kernel = get("crossfit", "kernel", "uniform")
    if kernel != "uniform":
        raise ConfigError(f"only the uniform kernel is implemented, got {kernel!r}",
                          path, src.key_line("kernel"))

    # [estimators]
    propensity = get("estimators", "propensity", est.TRUE_PI)
    if propensity not in est.PROPENSITY_MODES:
        raise ConfigError(f"propensity must be one of {est.PROPENSITY_MODES}, got {propensity!r}",
                          path, src.key_line("propensity"))

    # [harness]
    raw_grid = get("harness", "n_grid")
    if raw_grid is None:
        n_grid = DEFAULT_N_GRID
    else:
        try:
            n_grid = tuple(int(v) for v in _split_list(raw_grid))
        except ValueError:
            raise ConfigError("key 'n_grid' must be a comma list of integers",
                              path, src.key_line("n_grid")) from None
        if not n_grid or any(n < 1 for n in n_grid):
            raise ConfigError("'n_grid' entries must be positive", path, src.key_line("n_grid"))
    reps = _parse_int(src, "reps", get("harness", "reps", "5000"), minimum=1)
    seed = _parse_int(src, "seed", get("harness", "seed", "1729"), minimum=0)
    raw_jobs = get("harness", "jobs")
    if raw_jobs is None:
        raw_jobs = os.environ.get(JOBS_ENV_VAR, "1")
    jobs = _parse_int(src, "jobs", raw_jobs)
    if jobs == 0:
        raise ConfigError("'jobs' must be a positive count or -1 for all cores",
                          path, src.key_line("jobs"))
    bound_draws = _parse_int(src, "bound_draws", get("harness", "bound_draws", "1000000"),
                             minimum=10_000)

    return SimConfig(
        dgps=dgps,
        num_strata=num_strata,
        breakpoints=breakpoints,
        proportions=proportions,
        mechanism=mechanism,
        n_grid=n_grid,
        reps=reps,
        folds=folds,
        bandwidth_const=bandwidth_const,
        kernel=kernel,
        propensity_mode=propensity,
        seed=seed,
        jobs=jobs,
        bound_draws=bound_draws,
    )
