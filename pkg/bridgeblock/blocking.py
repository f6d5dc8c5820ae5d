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

"""Blocked Gibbs sampling of a bridge path.

m anchors split [0, T] into m + 1 equal segments. Each sweep visits the
anchor sets of the layout's partition and redraws, for every block of a
set, the path between the two conditioning points that enclose it. Anchor
and block positions are addressed by extended index: 0 is time 0, i is
anchor k_i and m + 1 is time T.
"""

from concurrent.futures import ThreadPoolExecutor
import csv
import logging
import math
import time

import numpy as np
from scipy.integrate import trapezoid

from bridgeblock import (
    BridgeBlockException,
    BudgetExceeded,
    InvalidArgs,
    )
from bridgeblock.bridge import (
    APPROXIMATE,
    DEFAULT_MAX_PROPOSALS,
    Path,
    sample_bridge,
    )
from bridgeblock.rng import (
    PURPOSE_PICKS,
    StreamFactory,
    block_stream,
    )

logger = logging.getLogger(__name__)

CHECKERBOARD = "checkerboard"
LEXICOGRAPHIC = "lexicographic"
RANDOM = "random"
SCHEMES = (CHECKERBOARD, LEXICOGRAPHIC, RANDOM)

FUNCTIONAL_MIDPOINT = "midpoint"
FUNCTIONAL_INTEGRAL = "integral"
FUNCTIONAL_ANCHOR_PREFIX = "anchor:"


def scheme_partition(scheme, m):
    """Anchor sets (0-based anchor indices) visited by a scheme.

    Checkerboard splits the anchors into odd and even ones (1-based); with
    a single anchor there is only one set.
    """
    if scheme == CHECKERBOARD:
        odd = tuple(range(0, m, 2))
        even = tuple(range(1, m, 2))
        if not even:
            return [odd]
        return [odd, even]
    elif scheme in (LEXICOGRAPHIC, RANDOM):
        return [(i,) for i in range(m)]
    raise InvalidArgs("unknown updating scheme %r" % (scheme,))


class BlockingLayout(object):
    """Equidistant anchors, their partition and the derived blocks.

    :ivar anchors: k_i = i T / (m + 1), i = 1..m
    :ivar partition: Anchor sets A_1.., as tuples of 0-based anchor indices
    :ivar blocks: For each anchor set, its blocks as (lo, hi) pairs of
        extended indices
    """

    def __init__(self, T, m, scheme):
        if not T > 0:
            raise InvalidArgs("T must be positive, got %r" % (T,))
        if int(m) != m or m < 1:
            raise InvalidArgs("need at least one anchor, got m=%r" % (m,))
        self.T = float(T)
        self.m = int(m)
        self.scheme = scheme
        self.anchors = np.arange(1, self.m + 1) * self.T / (self.m + 1)
        self.partition = scheme_partition(scheme, self.m)
        self.blocks = [self._blocks_for(s) for s in self.partition]

    def _blocks_for(self, anchor_set):
        updated = set(i + 1 for i in anchor_set)
        fixed = [j for j in range(self.m + 2) if j not in updated]
        return [(lo, hi) for lo, hi in zip(fixed[:-1], fixed[1:])
                if hi - lo > 1]

    @property
    def delta(self):
        return self.T / (self.m + 1)

    @property
    def extended_times(self):
        return np.concatenate(([0.0], self.anchors, [self.T]))

    @property
    def midpoint_time(self):
        """T/2 when it falls between anchors (even m), else None."""
        if self.m % 2 == 0:
            return self.T / 2
        return None

    def mesh_breakpoints(self, t_a, t_b):
        """Times strictly inside (t_a, t_b) that every mesh must contain.

        These are the anchors and, for even m, T/2, so that the midpoint
        functional reads a sampled value under both sampler variants.
        """
        points = list(self.anchors)
        if self.midpoint_time is not None:
            points.append(self.midpoint_time)
        return sorted(float(t) for t in points if t_a < t < t_b)

    def block_intervals(self, i):
        """Time intervals of the blocks of anchor set i."""
        ext = self.extended_times
        return [(ext[lo], ext[hi]) for lo, hi in self.blocks[i]]

    def __repr__(self):
        return "%s(T=%r, m=%d, scheme=%r)" % (self.__class__.__name__,
            self.T, self.m, self.scheme)


def build_layout(T, m, scheme):
    return BlockingLayout(T, m, scheme)


def initialize_path(x0, xT, T, layout, mesh):
    """Straight line from (0, x0) to (T, xT) on the mesh."""
    times = mesh.grid(0.0, T, layout.mesh_breakpoints(0.0, T))
    values = x0 + (xT - x0) * times / T
    values[0] = x0
    values[-1] = xT
    return Path(times, values)


class BlockedState(object):
    """Current path, stored as the m + 1 segments between anchors.

    :ivar segments: segments[j] spans extended indices j..j+1
    :ivar proposals: Proposals used so far, per anchor set
    :ivar updates: Block updates done so far, per anchor set
    """

    def __init__(self, layout, x0, xT, segments, sweep_index=0):
        if len(segments) != layout.m + 1:
            raise InvalidArgs("expected %d segments, got %d" % (
                layout.m + 1, len(segments)))
        self.layout = layout
        self.x0 = float(x0)
        self.xT = float(xT)
        self.segments = list(segments)
        self.sweep_index = sweep_index
        self.proposals = np.zeros(len(layout.partition), dtype=np.int64)
        self.updates = np.zeros(len(layout.partition), dtype=np.int64)

    @classmethod
    def from_knots(cls, layout, x0, xT, knots, mesh):
        """State whose path interpolates linearly between given knots."""
        knots = np.asarray(knots, dtype=float)
        if knots.shape != (layout.m,):
            raise InvalidArgs("expected %d knot values" % layout.m)
        ext_t = layout.extended_times
        ext_x = np.concatenate(([x0], knots, [xT]))
        segments = []
        for j in range(layout.m + 1):
            times = mesh.grid(ext_t[j], ext_t[j + 1],
                              layout.mesh_breakpoints(ext_t[j], ext_t[j + 1]))
            values = np.interp(times, ext_t[j:j + 2], ext_x[j:j + 2])
            values[0] = ext_x[j]
            values[-1] = ext_x[j + 1]
            segments.append(Path(times, values))
        return cls(layout, x0, xT, segments)

    @classmethod
    def initial(cls, layout, x0, xT, mesh):
        """State on the straight line between the endpoints."""
        line = initialize_path(x0, xT, layout.T, layout, mesh)
        return cls(layout, x0, xT, line.split(layout.anchors))

    @property
    def knots(self):
        return np.array([s.values[0] for s in self.segments[1:]])

    @property
    def extended_knots(self):
        return np.concatenate(([self.x0], self.knots, [self.xT]))

    @property
    def path(self):
        """The full path on [0, T]."""
        times = [self.segments[0].times]
        values = [self.segments[0].values]
        for s in self.segments[1:]:
            times.append(s.times[1:])
            values.append(s.values[1:])
        return Path(np.concatenate(times), np.concatenate(values),
                    variant=self.segments[0].variant)

    def replace(self, lo, hi, path):
        """Replace the segments between extended indices lo and hi."""
        cuts = self.layout.extended_times[lo + 1:hi]
        self.segments[lo:hi] = path.split(cuts)


def sweep_updates(layout, rng, sweep):
    """Anchor-set indices visited in one sweep, in order.

    The random scheme makes m uniform picks per sweep.
    """
    if layout.scheme == RANDOM:
        picker = block_stream(rng, 0, sweep, PURPOSE_PICKS)
        return [int(i) for i in picker.integers(0, layout.m, size=layout.m)]
    return list(range(len(layout.partition)))


def _draw_block(model, layout, ext_knots, lo, hi, mesh, stream, variant,
                max_proposals, anchor_set):
    ext = layout.extended_times
    try:
        return sample_bridge(model, ext_knots[lo], ext_knots[hi], ext[lo],
            ext[hi], mesh, stream, variant=variant,
            max_proposals=max_proposals,
            breakpoints=layout.mesh_breakpoints(ext[lo], ext[hi]))
    except BudgetExceeded as e:
        e.location = (float(ext[lo]), float(ext[hi]))
        e.block = anchor_set
        raise


def gibbs_sweep(state, model, mesh, rng, variant=APPROXIMATE,
                max_proposals=DEFAULT_MAX_PROPOSALS, executor=None):
    """Run one sweep of the blocked sampler, updating state in place.

    :param rng: StreamFactory (keyed streams per block and sweep) or a
        numpy Generator consumed sequentially
    :param executor: Optional executor for the blocks of one anchor set;
        only used with a StreamFactory
    :return: state
    """
    layout = state.layout
    sweep = state.sweep_index
    if not isinstance(rng, StreamFactory):
        executor = None
    for u, i in enumerate(sweep_updates(layout, rng, sweep)):
        ext_knots = state.extended_knots
        jobs = []
        for j, (lo, hi) in enumerate(layout.blocks[i]):
            stream = block_stream(rng, u * (layout.m + 2) + j, sweep)
            jobs.append((lo, hi, stream))
        if executor is not None and len(jobs) > 1:
            futures = [executor.submit(_draw_block, model, layout, ext_knots,
                                       lo, hi, mesh, stream, variant,
                                       max_proposals, i)
                       for lo, hi, stream in jobs]
            paths = [f.result() for f in futures]
        else:
            paths = [_draw_block(model, layout, ext_knots, lo, hi, mesh,
                                 stream, variant, max_proposals, i)
                     for lo, hi, stream in jobs]
        # Blocks of one set share no endpoints, so all draws above only
        # saw knots that are held fixed during this update.
        for (lo, hi, _), path in zip(jobs, paths):
            state.replace(lo, hi, path)
            state.proposals[i] += path.proposals_used
            state.updates[i] += 1
    state.sweep_index += 1
    return state


def _value_on_mesh(path, t):
    i = int(np.searchsorted(path.times, t))
    if i >= len(path.times) or path.times[i] != t:
        raise InvalidArgs("time %r is not on the path mesh" % (t,))
    return float(path.values[i])


def make_functional(name, layout):
    """Scalar functional of a BlockedState.

    ``midpoint`` is the value at T/2 (a knot when m is odd, otherwise the
    sampled point T/2 of the segment around it), ``anchor:<i>`` the i-th
    knot (1-based) and ``integral`` the trapezoid integral over the knots
    and endpoints.
    """
    if name == FUNCTIONAL_MIDPOINT:
        if layout.midpoint_time is None:
            index = layout.m // 2
            return lambda state: float(state.knots[index])
        half = layout.midpoint_time
        seg = layout.m // 2
        return lambda state: _value_on_mesh(state.segments[seg], half)
    elif name == FUNCTIONAL_INTEGRAL:
        ext = layout.extended_times
        return lambda state: float(trapezoid(state.extended_knots, ext))
    elif name.startswith(FUNCTIONAL_ANCHOR_PREFIX):
        try:
            index = int(name[len(FUNCTIONAL_ANCHOR_PREFIX):]) - 1
        except ValueError:
            raise InvalidArgs("bad anchor functional %r" % (name,))
        if not 0 <= index < layout.m:
            raise InvalidArgs("anchor %d out of range 1..%d" % (
                index + 1, layout.m))
        return lambda state: float(state.knots[index])
    raise InvalidArgs("unknown functional %r" % (name,))


def make_path_functional(name, T):
    """Scalar functional of a full Path, for the unblocked sampler."""
    if name == FUNCTIONAL_MIDPOINT:
        return lambda path: path.value_at(T / 2)
    elif name == FUNCTIONAL_INTEGRAL:
        return lambda path: float(trapezoid(path.values, path.times))
    raise InvalidArgs("functional %r needs anchors" % (name,))


class KnotChain(object):
    """Recorded output of a sampler run.

    :ivar block_proposals: Proposals used per anchor set
    :ivar block_updates: Block updates done per anchor set
    :ivar error: Exception that stopped the run early, or None
    """

    def __init__(self, m, functional_names=(), n_sets=0):
        self.m = m
        self.functional_names = tuple(functional_names)
        self._knots = []
        self._functionals = dict((name, []) for name in self.functional_names)
        self._sweep_ns = []
        self._proposals = []
        self.block_proposals = np.zeros(n_sets, dtype=np.int64)
        self.block_updates = np.zeros(n_sets, dtype=np.int64)
        self.error = None

    @classmethod
    def from_arrays(cls, knots, functionals=None, sweep_ns=None,
                    proposals=None):
        knots = np.asarray(knots, dtype=float)
        functionals = functionals or {}
        ret = cls(knots.shape[1], sorted(functionals))
        ret._knots = list(knots)
        for name, values in functionals.items():
            ret._functionals[name] = list(values)
        n = len(knots)
        ret._sweep_ns = list(sweep_ns) if sweep_ns is not None else [0] * n
        ret._proposals = list(proposals) if proposals is not None else [0] * n
        return ret

    def append(self, knots, functionals, ns, proposals):
        self._knots.append(np.array(knots, dtype=float))
        for name, value in zip(self.functional_names, functionals):
            self._functionals[name].append(value)
        self._sweep_ns.append(ns)
        self._proposals.append(proposals)

    def __len__(self):
        return len(self._knots)

    @property
    def knots(self):
        if not self._knots:
            return np.empty((0, self.m))
        return np.array(self._knots)

    @property
    def functionals(self):
        return dict((name, np.array(values, dtype=float))
                    for name, values in self._functionals.items())

    def series(self, name):
        try:
            return np.array(self._functionals[name], dtype=float)
        except KeyError:
            raise InvalidArgs("functional %r was not recorded" % (name,))

    @property
    def sweep_ns(self):
        return np.array(self._sweep_ns, dtype=np.int64)

    @property
    def proposals(self):
        return np.array(self._proposals, dtype=np.int64)

    @property
    def elapsed_seconds(self):
        return sum(self._sweep_ns) / 1e9

    @property
    def acceptance_rates(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.block_proposals > 0,
                            self.block_updates / self.block_proposals, np.nan)

    def discard(self, burn_in):
        """Copy without the first burn_in sweeps."""
        ret = KnotChain(self.m, self.functional_names,
                        len(self.block_proposals))
        ret._knots = self._knots[burn_in:]
        for name in self.functional_names:
            ret._functionals[name] = self._functionals[name][burn_in:]
        ret._sweep_ns = self._sweep_ns[burn_in:]
        ret._proposals = self._proposals[burn_in:]
        ret.block_proposals = self.block_proposals.copy()
        ret.block_updates = self.block_updates.copy()
        ret.error = self.error
        return ret

    def raise_for_error(self):
        if self.error is not None:
            raise self.error


class CSVRecorder(object):
    """Write one CSV row per sweep.

    With a timing file, cumulative nanoseconds go there instead of the
    chain file, so that the chain file depends only on config and seed.
    """

    def __init__(self, f, m, functional_names=(), timing_file=None,
                 header_lines=()):
        self._writer = csv.writer(f, lineterminator="\n")
        self._f = f
        self._timing = None
        for line in header_lines:
            f.write("# %s\n" % line)
        columns = ["sweep"] + ["k%d" % (i + 1) for i in range(m)]
        columns.extend(functional_names)
        if timing_file is None:
            columns.append("cumulative_ns")
        else:
            for line in header_lines:
                timing_file.write("# %s\n" % line)
            self._timing = csv.writer(timing_file, lineterminator="\n")
            self._timing.writerow(["sweep", "cumulative_ns"])
        self._writer.writerow(columns)

    def __call__(self, sweep_index, knots, functionals, cumulative_ns):
        row = [sweep_index]
        row.extend(repr(float(k)) for k in knots)
        row.extend(repr(float(v)) for v in functionals)
        if self._timing is None:
            row.append(cumulative_ns)
        else:
            self._timing.writerow([sweep_index, cumulative_ns])
        self._writer.writerow(row)


def run_blocked_sampler(model, x0, xT, T, layout, n_sweeps, mesh, rng,
                        recorder=None, functionals=(FUNCTIONAL_MIDPOINT,),
                        variant=APPROXIMATE,
                        max_proposals=DEFAULT_MAX_PROPOSALS,
                        initial_knots=None, workers=1):
    """Run the blocked sampler for n_sweeps sweeps.

    The path starts as the straight line between the endpoints unless
    initial_knots are given. Only the sweep itself is timed. A failing
    sweep stops the run; the chain recorded so far is returned with the
    exception in its ``error`` attribute.

    :param recorder: Callable(sweep_index, knots, functionals,
        cumulative_ns), called after each sweep
    :return: KnotChain
    """
    if n_sweeps < 1:
        raise InvalidArgs("need at least one sweep, got %r" % (n_sweeps,))
    if not math.isclose(layout.T, T):
        raise InvalidArgs("layout is for T=%r, not %r" % (layout.T, T))
    if initial_knots is None:
        state = BlockedState.initial(layout, x0, xT, mesh)
    else:
        state = BlockedState.from_knots(layout, x0, xT, initial_knots, mesh)
    fns = [make_functional(name, layout) for name in functionals]
    chain = KnotChain(layout.m, functionals, len(layout.partition))
    executor = None
    if (workers > 1 and layout.scheme == CHECKERBOARD and
            isinstance(rng, StreamFactory)):
        executor = ThreadPoolExecutor(max_workers=workers)
    cumulative = 0
    try:
        for n in range(n_sweeps):
            before = int(state.proposals.sum())
            start = time.perf_counter_ns()
            try:
                gibbs_sweep(state, model, mesh, rng, variant=variant,
                            max_proposals=max_proposals, executor=executor)
            except BridgeBlockException as e:
                logger.warning("sweep %d failed: %s", n + 1, e)
                chain.error = e
                break
            elapsed = time.perf_counter_ns() - start
            cumulative += elapsed
            values = [f(state) for f in fns]
            chain.append(state.knots, values, elapsed,
                         int(state.proposals.sum()) - before)
            if recorder is not None:
                recorder(state.sweep_index, state.knots, values, cumulative)
    finally:
        if executor is not None:
            executor.shutdown()
    chain.block_proposals = state.proposals.copy()
    chain.block_updates = state.updates.copy()
    logger.debug("%d sweeps of %r in %.3fs", len(chain), layout,
                 chain.elapsed_seconds)
    return chain


def run_unblocked_sampler(model, x0, xT, T, n_draws, mesh, rng,
                          recorder=None, functionals=(FUNCTIONAL_MIDPOINT,),
                          variant=APPROXIMATE,
                          max_proposals=DEFAULT_MAX_PROPOSALS):
    """Independent rejection draws of the whole bridge, as a KnotChain.

    T/2 is always on the mesh so that the midpoint functional is exact.
    """
    if n_draws < 1:
        raise InvalidArgs("need at least one draw, got %r" % (n_draws,))
    fns = [make_path_functional(name, T) for name in functionals]
    chain = KnotChain(0, functionals, 1)
    cumulative = 0
    for n in range(n_draws):
        stream = block_stream(rng, 0, n)
        start = time.perf_counter_ns()
        try:
            path = sample_bridge(model, x0, xT, 0.0, T, mesh, stream,
                                 variant=variant, max_proposals=max_proposals,
                                 breakpoints=(T / 2,))
        except BridgeBlockException as e:
            logger.warning("draw %d failed: %s", n + 1, e)
            chain.error = e
            break
        elapsed = time.perf_counter_ns() - start
        cumulative += elapsed
        values = [f(path) for f in fns]
        chain.append((), values, elapsed, path.proposals_used)
        chain.block_proposals[0] += path.proposals_used
        chain.block_updates[0] += 1
        if recorder is not None:
            recorder(n + 1, (), values, cumulative)
    return chain


def default_burn_in(n_sweeps, relaxation_time=None):
    """Sweeps to discard before computing diagnostics.

    max(10 ceil(relaxation_time), 1000) when a relaxation time is known,
    10% of the chain otherwise; never more than half the chain.
    """
    if relaxation_time is None or not np.isfinite(relaxation_time):
        return n_sweeps // 10
    return min(max(10 * int(math.ceil(relaxation_time)), 1000),
               n_sweeps // 2)
