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

"""Command-line front end and experiment harness.

Usage::

    bridgeblock sample|rates|experiment --config FILE [--seed N] [--out DIR]

Exit codes: 0 on success, 2 for configuration errors, 3 when a proposal
budget was exhausted and 4 for other numerical failures.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor, as_completed
import csv
import json
import logging
import math
import os
import sys
import warnings

import numpy as np

from bridgeblock import (
    BridgeBlockException,
    BudgetExceeded,
    ConfigError,
    DegenerateSeries,
    InvalidArgs,
    version_string,
    )
from bridgeblock.analysis import rate_report
from bridgeblock.blocking import (
    CSVRecorder,
    build_layout,
    default_burn_in,
    run_blocked_sampler,
    run_unblocked_sampler,
    )
from bridgeblock.bridge import MeshSpec
from bridgeblock.config import (
    BURN_IN_AUTO,
    EXPERIMENT_COST_PER_SWEEP,
    EXPERIMENT_COST_VS_T,
    EXPERIMENT_TAESS_VS_DELTA,
    EXPERIMENTS,
    config_hash,
    find_config,
    load_config,
    )
from bridgeblock.diagnostics import (
    diagnose,
    )
from bridgeblock.models import (
    is_gaussian,
    model_from_spec,
    )
from bridgeblock.rng import (
    StreamFactory,
    spawn_seed,
    )

logger = logging.getLogger(__name__)

ENV_OUTPUT_DIR = "BRIDGEBLOCK_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_NUMERICAL = 4

# Rough wall-clock cost of one mesh point of one sweep; only used to warn
# about grids that will clearly not finish within the budget.
SECONDS_PER_MESH_POINT = 2e-7

CHAIN_FILE = "chain.csv"
TIMING_FILE = "timing.csv"
SUMMARY_FILE = "summary.json"
RATES_FILE = "rates.csv"
EXPERIMENT_FILE = "experiment.csv"
SCHEMA_FILE = "schema.json"

RATES_COLUMNS = ["model", "scheme", "m", "T", "delta", "c_delta",
                 "lambda_max", "rho", "relaxation_time", "flag"]

EXPERIMENT_COLUMNS = ["T", "m", "delta", "n_sweeps", "burn_in",
                      "elapsed_seconds", "mean_sweep_seconds",
                      "proposals_per_sweep", "acceptance_rate",
                      "block_proposals", "block_updates", "ess", "taess",
                      "inv_taess", "fitted_rate", "analytic_rho", "status"]

SCHEMAS = {
    CHAIN_FILE: {
        "sweep": "sweep index, from 1",
        "k<i>": "knot value at anchor i",
        "<functional>": "recorded path functionals",
        },
    TIMING_FILE: {
        "sweep": "sweep index, from 1",
        "cumulative_ns": "wall-clock nanoseconds spent in sweeps so far",
        },
    RATES_FILE: {
        "model": "model kind",
        "scheme": "updating scheme",
        "m": "number of anchors",
        "T": "time horizon",
        "delta": "anchor spacing T / (m + 1)",
        "c_delta": "partial correlation of neighbouring knots",
        "lambda_max": "largest eigenvalue of the partial correlation matrix",
        "rho": "L2 convergence rate",
        "relaxation_time": "-1 / log(rho); 0 when one sweep is exact",
        "flag": "'exact' when rho is 0",
        },
    EXPERIMENT_FILE: {
        "T": "time horizon",
        "m": "number of anchors; 0 for the unblocked sampler",
        "delta": "anchor spacing T / (m + 1)",
        "n_sweeps": "sweeps (or independent draws) run",
        "burn_in": "sweeps discarded before diagnostics",
        "elapsed_seconds": "wall-clock time of the retained sweeps",
        "mean_sweep_seconds": "mean wall-clock time per sweep",
        "proposals_per_sweep": "mean bridge proposals per sweep",
        "acceptance_rate": "accepted over proposed bridges",
        "block_proposals": "proposals per anchor set, separated by ';'",
        "block_updates": "block updates per anchor set, separated by ';'",
        "ess": "effective sample size of the first functional",
        "taess": "ess / elapsed_seconds",
        "inv_taess": "1 / taess",
        "fitted_rate": "geometric decay rate fitted to the autocorrelation",
        "analytic_rho": "closed-form convergence rate, Gaussian models only",
        "status": "'ok' or 'failed: <reason>'",
        },
    }


def output_header(config, seed):
    return ["bridgeblock version=%s" % version_string(),
            "config_hash=%s" % config_hash(config),
            "seed=%d" % seed]


def resolve_output_dir(out, config):
    """--out, else $BRIDGEBLOCK_OUTPUT_DIR, else the config's output dir."""
    if out:
        return out
    return os.environ.get(ENV_OUTPUT_DIR) or config.output_dir


def _analytic(model, scheme, m, T):
    if m < 1 or not is_gaussian(model):
        return None
    try:
        return rate_report(model, scheme, m, T)
    except BridgeBlockException as e:
        logger.debug("no analytic rate for m=%d, T=%r: %s", m, T, e)
        return None


def _run_chain(config, model, mesh, T, m, xT, rng, recorder=None):
    if m == 0:
        return run_unblocked_sampler(model, config.x0, xT, T,
            config.n_sweeps, mesh, rng, recorder=recorder,
            functionals=config.functionals, variant=config.variant,
            max_proposals=config.max_proposals)
    layout = build_layout(T, m, config.scheme)
    return run_blocked_sampler(model, config.x0, xT, T, layout,
        config.n_sweeps, mesh, rng, recorder=recorder,
        functionals=config.functionals, variant=config.variant,
        max_proposals=config.max_proposals, workers=config.workers)


def _burn_in(config, n, report):
    if config.burn_in != BURN_IN_AUTO:
        return min(int(config.burn_in), n // 2)
    return default_burn_in(n, report.relaxation_time if report else None)


def _summarise(config, chain, report):
    """Diagnostics of a finished chain, as a dict."""
    n = len(chain)
    burn_in = _burn_in(config, n, report)
    kept = chain.discard(burn_in)
    proposals = int(chain.block_proposals.sum())
    updates = int(chain.block_updates.sum())
    ret = {
        "n_sweeps": n,
        "burn_in": burn_in,
        "elapsed_seconds": kept.elapsed_seconds,
        "mean_sweep_seconds": chain.elapsed_seconds / n if n else math.nan,
        "proposals_per_sweep": proposals / float(n) if n else math.nan,
        "acceptance_rate": updates / float(proposals) if proposals else
            math.nan,
        "block_proposals": chain.block_proposals.tolist(),
        "block_updates": chain.block_updates.tolist(),
        "ess": math.nan,
        "taess": math.nan,
        "inv_taess": math.nan,
        "fitted_rate": math.nan,
        "analytic_rho": report.rho if report else math.nan,
        }
    try:
        row = diagnose(kept.series(config.functionals[0]),
                       kept.elapsed_seconds, config.functionals[0])
    except (DegenerateSeries, InvalidArgs) as e:
        logger.info("no diagnostics for chain: %s", e)
    else:
        ret.update(ess=row.ess, taess=row.taess, fitted_rate=row.fitted_rate)
        if row.taess > 0:
            ret["inv_taess"] = 1.0 / row.taess
    return ret


def run_cell(config, T_index, T, m, seed):
    """Run one (T, m) grid cell; failures are reported in the row.

    Module-level so that it can be shipped to worker processes.
    """
    row = {"T": T, "m": m, "delta": T / (m + 1), "status": "ok"}
    try:
        model = config.build_model()
        mesh = MeshSpec(config.mesh_width)
        rng = StreamFactory(spawn_seed(seed, T_index, m))
        chain = _run_chain(config, model, mesh, T, m,
                           config.endpoint(T_index), rng)
        chain.raise_for_error()
        row.update(_summarise(config, chain,
                              _analytic(model, config.scheme, m, T)))
    except BridgeBlockException as e:
        row["status"] = "failed: %s" % e
    return row


class ExperimentRecord(object):
    """Rows of one experiment, with the config hash and seed."""

    def __init__(self, which, config, seed):
        self.which = which
        self.config_hash = config_hash(config)
        self.seed = seed
        self.rows = []
        self.slope = None

    def fit_slope(self):
        """Least-squares slope of log(1 / taESS) against log T."""
        points = [(r["T"], r["inv_taess"]) for r in self.rows
                  if r["status"] == "ok" and np.isfinite(r["inv_taess"])
                  and r["inv_taess"] > 0]
        if len(set(t for t, _ in points)) < 2:
            return None
        x = np.log([t for t, _ in points])
        y = np.log([v for _, v in points])
        self.slope = float(np.polyfit(x, y, 1)[0])
        return self.slope

    def best_delta(self, T):
        """delta with the largest taESS at a given T, or None."""
        cells = [r for r in self.rows if r["T"] == T and r["status"] == "ok"
                 and np.isfinite(r["taess"])]
        if not cells:
            return None
        return max(cells, key=lambda r: r["taess"])["delta"]

    def argmax_is_interior(self, T):
        """Whether taESS at T peaks strictly inside the scanned deltas.

        :return: True or False, or None with fewer than three usable cells
        """
        deltas = [r["delta"] for r in self.rows if r["T"] == T
                  and r["status"] == "ok" and np.isfinite(r["taess"])]
        if len(set(deltas)) < 3:
            return None
        return min(deltas) < self.best_delta(T) < max(deltas)

    def peaks(self):
        """Per-T location of the taESS maximum."""
        times = sorted(set(r["T"] for r in self.rows))
        return [{"T": T, "best_delta": self.best_delta(T),
                 "interior": self.argmax_is_interior(T)} for T in times]

    def as_dict(self):
        ret = {"experiment": self.which, "config_hash": self.config_hash,
               "seed": self.seed, "version": version_string(),
               "slope": self.slope, "rows": self.rows}
        if self.which == EXPERIMENT_TAESS_VS_DELTA:
            ret["peaks"] = self.peaks()
        return ret


class ExperimentRunner(object):
    """Runs commands for one config and writes their outputs.

    :ivar logf: Optional file receiving progress lines
    """

    def __init__(self, config, out_dir, seed=None, logf=None):
        self.config = config
        self.out_dir = out_dir
        self.seed = config.seed if seed is None else int(seed)
        self._logf = logf

    def mutter(self, text):
        logger.debug(text)
        if self._logf is not None:
            self._logf.write("%s\n" % text)

    def _path(self, name):
        if not os.path.isdir(self.out_dir):
            os.makedirs(self.out_dir)
        return os.path.join(self.out_dir, name)

    def _header(self):
        return output_header(self.config, self.seed)

    def _write_json(self, name, data):
        with open(self._path(name), "w") as f:
            json.dump(data, f, indent=2, sort_keys=True, default=_json_default)
            f.write("\n")

    def _write_schema(self, names):
        schema = dict((name, SCHEMAS[name]) for name in names)
        schema["header"] = {"version": version_string(),
                            "config_hash": config_hash(self.config),
                            "seed": self.seed}
        self._write_json(SCHEMA_FILE, schema)

    def sample(self):
        """Run one chain and write chain, timing and summary files.

        The first T of the grid is used, with the first m it names; m = 0
        or no m at all selects the unblocked sampler.

        :return: Summary dict
        :raise BudgetExceeded: after writing partial output
        """
        config = self.config
        model = config.build_model()
        mesh = MeshSpec(config.mesh_width)
        T = config.T_grid[0]
        m = config.knots_for(T)[0]
        xT = config.endpoint(0)
        self.mutter("sampling %r on [0, %r], m=%d" % (model, T, m))
        rng = StreamFactory(self.seed)
        with open(self._path(CHAIN_FILE), "w", newline="") as chain_f, \
                open(self._path(TIMING_FILE), "w", newline="") as timing_f:
            recorder = CSVRecorder(chain_f, m, config.functionals,
                                   timing_file=timing_f,
                                   header_lines=self._header())
            chain = _run_chain(config, model, mesh, T, m, xT, rng,
                               recorder=recorder)
        report = _analytic(model, config.scheme, m, T)
        summary = {
            "version": version_string(),
            "config_hash": config_hash(config),
            "seed": self.seed,
            "model": model.describe(),
            "T": T,
            "m": m,
            "x0": config.x0,
            "xT": xT,
            "scheme": config.scheme if m else None,
            "variant": config.variant,
            "requested_sweeps": config.n_sweeps,
            "block_proposals": chain.block_proposals.tolist(),
            "block_updates": chain.block_updates.tolist(),
            "acceptance_rates": chain.acceptance_rates.tolist(),
            "analytic": report._asdict() if report else None,
            "error": str(chain.error) if chain.error else None,
            }
        if len(chain):
            summary.update(_summarise(config, chain, report))
        self._write_json(SUMMARY_FILE, summary)
        self._write_schema([CHAIN_FILE, TIMING_FILE])
        self.mutter("wrote %d sweeps to %s" % (len(chain), self.out_dir))
        chain.raise_for_error()
        return summary

    def rates(self):
        """Closed-form rate reports over models, schemes, m and T.

        :return: List of RateReport
        """
        config = self.config
        reports = []
        with open(self._path(RATES_FILE), "w", newline="") as f:
            for line in self._header():
                f.write("# %s\n" % line)
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(RATES_COLUMNS)
            for spec in config.models:
                model = model_from_spec(spec)
                if not is_gaussian(model):
                    self.mutter("no closed-form rates for %r, skipping" %
                                model)
                    continue
                for scheme in config.schemes:
                    for T in config.T_grid:
                        for m in config.knots_for(T):
                            if m < 1:
                                continue
                            report = rate_report(model, scheme, m, T)
                            reports.append(report)
                            writer.writerow([model.kind] + list(report))
        self._write_schema([RATES_FILE])
        self.mutter("wrote %d rate rows" % len(reports))
        return reports

    def cells(self, which):
        """(T_index, T, m) triples of an experiment grid."""
        ret = []
        for i, T in enumerate(self.config.T_grid):
            if which == EXPERIMENT_COST_VS_T:
                ms = [self.config.optimal_knots(T)]
            else:
                ms = self.config.knots_for(T)
            ret.extend((i, T, m) for m in ms)
        return ret

    def estimate_runtime(self, cells):
        """Lower estimate of the grid's runtime in seconds."""
        points = sum(max(T / self.config.mesh_width, 1.0)
                     for _, T, _ in cells)
        return points * self.config.n_sweeps * SECONDS_PER_MESH_POINT

    def experiment(self, which):
        """Run an experiment grid, appending one row per cell as it ends.

        :return: ExperimentRecord
        """
        if which not in EXPERIMENTS:
            raise InvalidArgs("unknown experiment %r" % (which,))
        config = self.config
        cells = self.cells(which)
        estimate = self.estimate_runtime(cells)
        if estimate > config.budget_seconds:
            msg = ("experiment %s needs at least %.0fs, budget is %.0fs" % (
                which, estimate, config.budget_seconds))
            self.mutter(msg)
            warnings.warn(msg, RuntimeWarning)
        record = ExperimentRecord(which, config, self.seed)
        with open(self._path(EXPERIMENT_FILE), "w", newline="") as f:
            for line in self._header() + ["experiment=%s" % which]:
                f.write("# %s\n" % line)
            writer = csv.DictWriter(f, EXPERIMENT_COLUMNS,
                                    lineterminator="\n",
                                    extrasaction="ignore")
            writer.writeheader()

            def emit(row):
                record.rows.append(row)
                writer.writerow(_csv_row(row))
                f.flush()
                self.mutter("T=%r m=%d: %s" % (row["T"], row["m"],
                                               row["status"]))

            if config.workers > 1 and len(cells) > 1:
                with ProcessPoolExecutor(max_workers=config.workers) as pool:
                    futures = [pool.submit(run_cell, config, i, T, m,
                                           self.seed) for i, T, m in cells]
                    for future in as_completed(futures):
                        emit(future.result())
            else:
                for i, T, m in cells:
                    emit(run_cell(config, i, T, m, self.seed))
        record.rows.sort(key=lambda r: (r["T"], r["m"]))
        if which == EXPERIMENT_COST_VS_T:
            record.fit_slope()
            self.mutter("log-log slope of 1/taESS against T: %r" %
                        record.slope)
        self._write_json(SUMMARY_FILE, record.as_dict())
        self._write_schema([EXPERIMENT_FILE])
        return record


def _csv_row(row):
    """Row with list values joined by ';', for the experiment CSV."""
    return dict((key, ";".join(str(v) for v in value)
                 if isinstance(value, list) else value)
                for key, value in row.items())


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError("cannot serialise %r" % (obj,))


def cmd_sample(config, out_dir, seed=None, logf=None):
    return ExperimentRunner(config, out_dir, seed, logf).sample()


def cmd_rates(config, out_dir, seed=None, logf=None):
    return ExperimentRunner(config, out_dir, seed, logf).rates()


def cmd_experiment(config, which, out_dir, seed=None, logf=None):
    return ExperimentRunner(config, out_dir, seed, logf).experiment(which)


def build_parser():
    parser = argparse.ArgumentParser(prog="bridgeblock",
        description="Blocked Gibbs sampling of diffusion bridges.")
    parser.add_argument("--version", action="version",
                        version="%(prog)s " + version_string())
    sub = parser.add_subparsers(dest="command")
    sub.required = True
    for name, help in [
            ("sample", "run one chain and write its knots"),
            ("rates", "tabulate closed-form convergence rates"),
            ("experiment", "run an experiment grid")]:
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", required=True,
                       help="TOML or JSON file, or the name of a shipped "
                            "configuration")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--log", default=None,
                       help="append progress lines to this file")
        p.add_argument("-v", "--verbose", action="count", default=0)
        if name == "experiment":
            p.add_argument("--which", choices=EXPERIMENTS, default=None,
                           help="experiment to run; defaults to the "
                                "config's")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][
        min(args.verbose, 2)]
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    logf = None
    try:
        config = load_config(find_config(args.config))
        out_dir = resolve_output_dir(args.out, config)
        if args.log:
            logf = open(args.log, "a")
        if args.command == "sample":
            cmd_sample(config, out_dir, args.seed, logf)
        elif args.command == "rates":
            cmd_rates(config, out_dir, args.seed, logf)
        else:
            which = args.which or config.experiment
            if which is None:
                raise ConfigError("no experiment named in config or on the "
                                  "command line", key="experiment")
            cmd_experiment(config, which, out_dir, args.seed, logf)
    except ConfigError as e:
        sys.stderr.write("bridgeblock: configuration error: %s\n" % e)
        return EXIT_CONFIG
    except BudgetExceeded as e:
        sys.stderr.write("bridgeblock: %s\n" % e)
        return EXIT_BUDGET
    except BridgeBlockException as e:
        sys.stderr.write("bridgeblock: %s\n" % e)
        return EXIT_NUMERICAL
    finally:
        if logf is not None:
            logf.close()
    return EXIT_OK
