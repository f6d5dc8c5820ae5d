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

"""Counter-based random streams.

Every block update draws from its own Philox stream, keyed by
(seed, chain, purpose) and positioned by (block, sweep). Draws therefore
do not depend on the order in which blocks are visited, which keeps
concurrent half-sweeps bit-identical to sequential ones.
"""

import numpy as np

PURPOSE_BRIDGE = 0
PURPOSE_PICKS = 1
PURPOSE_INIT = 2
PURPOSE_CHAIN = 3


def spawn_seed(seed, *key):
    """Derive an integer seed for a sub-task.

    :param seed: Root seed
    :param key: Non-negative integers identifying the sub-task
    :return: Integer seed
    """
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint32)[0])


def as_generator(rng):
    """Coerce None, an integer seed or a Generator to a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


class StreamFactory(object):
    """Keyed Philox streams for one chain."""

    def __init__(self, seed, chain=0):
        self.seed = int(seed)
        self.chain = int(chain)
        self._keys = {}

    def _key(self, purpose):
        try:
            return self._keys[purpose]
        except KeyError:
            ss = np.random.SeedSequence(self.seed,
                spawn_key=(self.chain, purpose))
            key = ss.generate_state(2, np.uint64)
            self._keys[purpose] = key
            return key

    def stream(self, block, sweep, purpose=PURPOSE_BRIDGE):
        """Return the generator for a (block, sweep) pair.

        The two high words of the Philox counter hold block and sweep, the
        low words are consumed by the draws themselves.
        """
        counter = np.array([0, 0, block, sweep], dtype=np.uint64)
        return np.random.Generator(
            np.random.Philox(key=self._key(purpose), counter=counter))

    def __repr__(self):
        return "%s(%d, chain=%d)" % (self.__class__.__name__, self.seed,
            self.chain)


def block_stream(rng, block, sweep, purpose=PURPOSE_BRIDGE):
    """Stream for a block update.

    A StreamFactory yields its keyed stream; a plain Generator is returned
    as-is and consumed sequentially.
    """
    if isinstance(rng, StreamFactory):
        return rng.stream(block, sweep, purpose)
    return rng
