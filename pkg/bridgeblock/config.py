# Copyright (C) 2024 The bridgeblock developers

# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation; either version 2.1 of the License, or
# (at your option) any later version.

# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Lesser General Public License for more details.

# You should have received a copy of the GNU Lesser General Public License
# along with this program; if not, write to the Free Software
# Foundation, Inc., 51 Franklin St, Fifth Floor, Boston, MA 02110-1301, USA

"""Experiment configuration files.

A configuration is a TOML document (or the same structure as JSON)::

    seed = 42
    experiment = "taess-vs-delta"

    [model]
    kind = "sine"

    [bridge]
    x0 = 0.0
    xT = [0.85, 0.85, 0.95]      # one per T, or a single number

    [grid]
    T = [0.4, 0.5, 1.0]
    m = [1, 2, 4, 8]             # or a [grid.optimal] table with c1, chi1

    [sampler]
    scheme = "checkerboard"
    n_sweeps = 10000

    [output]
    dir = "results"
"""

import hashlib
import json
import os
import re

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from bridgeblock import (
    ConfigError,
    InvalidArgs,
    )
from bridgeblock.analysis import optimal_num_knots
from bridgeblock.blocking import (
    CHECKERBOARD,
    FUNCTIONAL_ANCHOR_PREFIX,
    FUNCTIONAL_INTEGRAL,
    FUNCTIONAL_MIDPOINT,
    SCHEMES,
    )
from bridgeblock.bridge import (
    APPROXIMATE,
    DEFAULT_MAX_PROPOSALS,
    DEFAULT_MESH_WIDTH,
    VARIANTS,
    )
from bridgeblock.models import model_from_spec

EXPERIMENT_COST_PER_SWEEP = "cost-per-sweep"
EXPERIMENT_TAESS_VS_DELTA = "taess-vs-delta"
EXPERIMENT_COST_VS_T = "cost-vs-t"
EXPERIMENTS = (EXPERIMENT_COST_PER_SWEEP, EXPERIMENT_TAESS_VS_DELTA,
               EXPERIMENT_COST_VS_T)

BURN_IN_AUTO = "auto"

DEFAULT_BUDGET_SECONDS = 1800.0
DEFAULT_C1 = 10.0
DEFAULT_CHI1 = 0.0

_SECTIONS = ("model", "bridge", "grid", "sampler", "output")
_TOP_LEVEL = ("seed", "experiment") + _SECTIONS


def _locate(text, key):
    """Line of a dotted key in the source text, or None."""
    if text is None:
        return None
    parts = key.split(".")
    name = re.escape(parts[-1])
    pattern = re.compile(r'^\s*("?%s"?\s*[=:]|\[\s*%s\s*\])' % (name, name))
    section = None
    if len(parts) > 1:
        section = re.compile(r'^\s*(\[\s*%s\s*\]|"%s"\s*:)' % (
            r"\s*\.\s*".join(re.escape(p) for p in parts[:-1]),
            re.escape(parts[-2])))
    in_section = section is None
    first = None
    for lineno, line in enumerate(text.splitlines(), 1):
        if section is not None and section.match(line):
            in_section = True
            continue
        if section is not None and line.lstrip().startswith("["):
            in_section = False
        if pattern.match(line):
            if in_section:
                return lineno
            if first is None:
                first = lineno
    return first


class _Reader(object):
    """Typed access to a parsed document, with located errors."""

    def __init__(self, data, text):
        self.data = data
        self.text = text

    def error(self, key, msg):
        return ConfigError(msg, key=key, line=_locate(self.text, key))

    def table(self, key):
        value = self.data.get(key, {})
        if not isinstance(value, dict):
            raise self.error(key, "expected a table")
        return value

    def get(self, table, section, key, kind, default=None, required=False):
        dotted = "%s.%s" % (section, key) if section else key
        if key not in table:
            if required:
                raise self.error(section or key, "missing key %r" % key)
            return default
        value = table[key]
        if kind is float and isinstance(value, int) and not isinstance(
                value, bool):
            value = float(value)
        if not isinstance(value, kind) or isinstance(value, bool) and (
                kind is not bool):
            raise self.error(dotted, "expected %s, got %r" % (
                getattr(kind, "__name__", kind), value))
        return value

    def number_list(self, table, section, key, default=None, integer=False,
                    required=False):
        dotted = "%s.%s" % (section, key)
        if key not in table:
            if required:
                raise self.error(section, "missing key %r" % key)
            return default
        value = table[key]
        if not isinstance(value, list):
            value = [value]
        if not value:
            raise self.error(dotted, "must not be empty")
        ret = []
        for v in value:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise self.error(dotted, "expected numbers, got %r" % (v,))
            if integer and int(v) != v:
                raise self.error(dotted, "expected integers, got %r" % (v,))
            ret.append(int(v) if integer else float(v))
        return ret


class ExperimentConfig(object):
    """Declarative description of a run or experiment grid."""

    def __init__(self, model, x0=0.0, xT=(0.0,), T_grid=(1.0,), m_grid=None,
                 optimal=None, scheme=CHECKERBOARD, schemes=None,
                 models=None, n_sweeps=1000, burn_in=BURN_IN_AUTO,
                 mesh_width=DEFAULT_MESH_WIDTH, variant=APPROXIMATE,
                 max_proposals=DEFAULT_MAX_PROPOSALS,
                 functionals=(FUNCTIONAL_MIDPOINT,), workers=1, seed=0,
                 experiment=None, output_dir=".",
                 budget_seconds=DEFAULT_BUDGET_SECONDS):
        self.model = dict(model)
        self.x0 = float(x0)
        self.xT = [float(v) for v in xT]
        self.T_grid = [float(t) for t in T_grid]
        self.m_grid = None if m_grid is None else [int(m) for m in m_grid]
        self.optimal = optimal
        self.scheme = scheme
        self.schemes = list(schemes) if schemes else [scheme]
        self.models = [dict(m) for m in models] if models else [self.model]
        self.n_sweeps = int(n_sweeps)
        self.burn_in = burn_in
        self.mesh_width = float(mesh_width)
        self.variant = variant
        self.max_proposals = int(max_proposals)
        self.functionals = list(functionals)
        self.workers = int(workers)
        self.seed = int(seed)
        self.experiment = experiment
        self.output_dir = output_dir
        self.budget_seconds = float(budget_seconds)

    def build_model(self):
        return model_from_spec(self.model)

    def endpoint(self, index):
        """xT for the index-th T of the grid."""
        if len(self.xT) == 1:
            return self.xT[0]
        return self.xT[index]

    def knots_for(self, T):
        """m values to run at T.

        The m grid if given, else the optimal-knot rule if given, else
        [0], which stands for the unblocked sampler.
        """
        if self.m_grid is not None:
            return list(self.m_grid)
        if self.optimal is not None:
            return [self.optimal_knots(T)]
        return [0]

    def optimal_knots(self, T):
        c1, chi1 = self.optimal or (DEFAULT_C1, DEFAULT_CHI1)
        return optimal_num_knots(T, c1, chi1)

    def as_dict(self):
        """Canonical form; seed and output location excluded."""
        return {
            "model": self.model,
            "models": self.models,
            "bridge": {"x0": self.x0, "xT": self.xT},
            "grid": {"T": self.T_grid, "m": self.m_grid,
                     "optimal": list(self.optimal) if self.optimal else None,
                     "schemes": self.schemes},
            "sampler": {"scheme": self.scheme, "n_sweeps": self.n_sweeps,
                        "burn_in": self.burn_in, "mesh": self.mesh_width,
                        "variant": self.variant,
                        "max_proposals": self.max_proposals,
                        "functionals": self.functionals,
                        "workers": self.workers},
            "experiment": self.experiment,
            }

    def __repr__(self):
        return "<%s %s>" % (self.__class__.__name__, config_hash(self))


def config_hash(config):
    """MD5 hex digest of the canonical JSON form of a config."""
    canonical = json.dumps(config.as_dict(), sort_keys=True,
                           separators=(",", ":"))
    return hashlib.md5(canonical.encode("utf-8")).hexdigest()


def _decode(text, fmt):
    if fmt == "json":
        try:
            return json.loads(text)
        except ValueError as e:
            raise ConfigError(getattr(e, "msg", str(e)),
                              line=getattr(e, "lineno", None),
                              column=getattr(e, "colno", None), child=e)
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        line = getattr(e, "lineno", None)
        column = getattr(e, "colno", None)
        msg = getattr(e, "msg", None) or str(e)
        if line is None:
            found = re.search(r"line (\d+), column (\d+)", str(e))
            if found:
                line, column = int(found.group(1)), int(found.group(2))
                msg = re.sub(r"\s*\(at line .*\)$", "", msg)
        raise ConfigError(msg, line=line, column=column, child=e)


def parse_config(text, fmt="toml"):
    """Parse configuration text.

    :param text: Document text
    :param fmt: "toml" or "json"
    :return: ExperimentConfig
    :raise ConfigError: with the offending key and line
    """
    data = _decode(text, fmt)
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a table")
    r = _Reader(data, text)
    for key in data:
        if key not in _TOP_LEVEL:
            raise r.error(key, "unknown key")

    seed = r.get(data, None, "seed", int, default=0)
    experiment = r.get(data, None, "experiment", str)
    if experiment is not None and experiment not in EXPERIMENTS:
        raise r.error("experiment", "expected one of %s" % ", ".join(
            EXPERIMENTS))

    model = r.table("model")
    if not model:
        raise r.error("model", "missing [model] table")
    _check_model(r, "model", model)

    bridge = r.table("bridge")
    x0 = r.get(bridge, "bridge", "x0", float, default=0.0)
    xT = r.number_list(bridge, "bridge", "xT", default=[0.0])

    grid = r.table("grid")
    T_grid = r.number_list(grid, "grid", "T", required=True)
    for T in T_grid:
        if not T > 0:
            raise r.error("grid.T", "T must be positive, got %r" % T)
    if len(xT) not in (1, len(T_grid)):
        raise r.error("bridge.xT", "need one value or one per T (%d)" %
                      len(T_grid))
    m_grid = r.number_list(grid, "grid", "m", integer=True)
    if m_grid is not None:
        for m in m_grid:
            if m < 0:
                raise r.error("grid.m", "m must not be negative")
    optimal = None
    if "optimal" in grid:
        table = r.get(grid, "grid", "optimal", dict)
        c1 = r.get(table, "grid.optimal", "c1", float, default=DEFAULT_C1)
        chi1 = r.get(table, "grid.optimal", "chi1", float,
                     default=DEFAULT_CHI1)
        if not (c1 > 0 and chi1 >= 0):
            raise r.error("grid.optimal", "need c1 > 0 and chi1 >= 0")
        optimal = (c1, chi1)
    schemes = grid.get("schemes")
    if schemes is not None:
        if not isinstance(schemes, list) or not schemes:
            raise r.error("grid.schemes", "expected a nonempty list")
        for s in schemes:
            if s not in SCHEMES:
                raise r.error("grid.schemes", "unknown scheme %r" % (s,))
    models = grid.get("models")
    if models is not None:
        if not isinstance(models, list) or not models:
            raise r.error("grid.models", "expected a nonempty list of tables")
        for spec in models:
            if not isinstance(spec, dict):
                raise r.error("grid.models", "expected tables")
            _check_model(r, "grid.models", spec)

    sampler = r.table("sampler")
    scheme = r.get(sampler, "sampler", "scheme", str, default=CHECKERBOARD)
    if scheme not in SCHEMES:
        raise r.error("sampler.scheme", "unknown scheme %r" % scheme)
    n_sweeps = r.get(sampler, "sampler", "n_sweeps", int, default=1000)
    if n_sweeps < 1:
        raise r.error("sampler.n_sweeps", "must be at least 1")
    burn_in = sampler.get("burn_in", BURN_IN_AUTO)
    if burn_in != BURN_IN_AUTO and (isinstance(burn_in, bool) or
            not isinstance(burn_in, int) or not 0 <= burn_in < n_sweeps):
        raise r.error("sampler.burn_in",
                      "expected \"auto\" or an integer below n_sweeps")
    mesh = r.get(sampler, "sampler", "mesh", float, default=DEFAULT_MESH_WIDTH)
    if not mesh > 0:
        raise r.error("sampler.mesh", "must be positive")
    variant = r.get(sampler, "sampler", "variant", str, default=APPROXIMATE)
    if variant not in VARIANTS:
        raise r.error("sampler.variant", "expected one of %s" % ", ".join(
            VARIANTS))
    max_proposals = r.get(sampler, "sampler", "max_proposals", int,
                          default=DEFAULT_MAX_PROPOSALS)
    if max_proposals < 1:
        raise r.error("sampler.max_proposals", "must be at least 1")
    functionals = sampler.get("functionals", [FUNCTIONAL_MIDPOINT])
    optimal_m = [optimal_num_knots(T, *(optimal or (DEFAULT_C1,
                                                     DEFAULT_CHI1)))
                 for T in T_grid]
    if experiment == EXPERIMENT_COST_VS_T:
        # cost-vs-t always runs at the optimal number of anchors
        m_values = optimal_m
    elif m_grid is not None:
        m_values = m_grid
    elif optimal is not None:
        m_values = optimal_m
    else:
        m_values = [0]
    _check_functionals(r, functionals, min(m_values))
    workers = r.get(sampler, "sampler", "workers", int, default=1)
    if workers < 1:
        raise r.error("sampler.workers", "must be at least 1")

    output = r.table("output")
    output_dir = r.get(output, "output", "dir", str, default=".")
    budget = r.get(output, "output", "budget_seconds", float,
                   default=DEFAULT_BUDGET_SECONDS)

    return ExperimentConfig(model, x0=x0, xT=xT, T_grid=T_grid,
        m_grid=m_grid, optimal=optimal, scheme=scheme, schemes=schemes,
        models=models, n_sweeps=n_sweeps, burn_in=burn_in, mesh_width=mesh,
        variant=variant, max_proposals=max_proposals,
        functionals=functionals, workers=workers, seed=seed,
        experiment=experiment, output_dir=output_dir, budget_seconds=budget)


def _check_functionals(reader, names, fewest_anchors):
    """Reject functional names the samplers cannot record.

    ``anchor:<i>`` must exist for every m of the grid; m = 0 (unblocked)
    has no anchors at all.
    """
    key = "sampler.functionals"
    if not isinstance(names, list) or not names or not all(
            isinstance(f, str) for f in names):
        raise reader.error(key, "expected a nonempty list of names")
    for name in names:
        if name in (FUNCTIONAL_MIDPOINT, FUNCTIONAL_INTEGRAL):
            continue
        if not name.startswith(FUNCTIONAL_ANCHOR_PREFIX):
            raise reader.error(key, "unknown functional %r" % (name,))
        try:
            index = int(name[len(FUNCTIONAL_ANCHOR_PREFIX):])
        except ValueError:
            raise reader.error(key, "bad anchor functional %r" % (name,))
        if not 1 <= index <= fewest_anchors:
            raise reader.error(key, "%s out of range 1..%d for m = %d" % (
                name, fewest_anchors, fewest_anchors))


def _check_model(reader, key, spec):
    try:
        model_from_spec(spec)
    except InvalidArgs as e:
        raise reader.error("%s.kind" % key if "kind" not in spec else key,
                           e.args[0])


def load_config(path):
    """Read a configuration file; ``.json`` files are parsed as JSON."""
    fmt = "json" if os.path.splitext(path)[1].lower() == ".json" else "toml"
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except (IOError, OSError) as e:
        raise ConfigError("cannot read %s: %s" % (path, e), child=e)
    return parse_config(text, fmt)


SHIPPED_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                           "experiments")


def shipped_configs():
    """Configurations installed with the package.

    :return: Dictionary mapping names such as "taess-vs-delta" to paths
    """
    ret = {}
    if not os.path.isdir(SHIPPED_DIR):
        return ret
    for filename in os.listdir(SHIPPED_DIR):
        name, ext = os.path.splitext(filename)
        if ext == ".toml":
            ret[name.replace("_", "-")] = os.path.join(SHIPPED_DIR, filename)
    return ret


def find_config(name):
    """Path of a config file, falling back to the shipped configurations."""
    if os.path.exists(name):
        return name
    shipped = shipped_configs()
    if name in shipped:
        return shipped[name]
    return name
