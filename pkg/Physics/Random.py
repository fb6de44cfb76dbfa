"""Counter-based random streams for trajectory ensembles.

Every trajectory draws from its own Philox generator keyed by
(master seed, stream, trajectory index). A trajectory therefore sees the
same numbers no matter which worker runs it, how ensembles are chunked,
or in which order chunks complete. No module keeps global random state.
"""

import logging

import numpy as np

# Stream identifiers keep independent uses of one master seed apart
RECORD_STREAM       = 0
JUMP_STREAM         = 1
THEORY_STREAM       = 2
ESTIMATION_STREAM   = 3

# Trajectories per chunk; fixed so results never depend on the worker count
CHUNK_SIZE = 64

MAX_SEED = 2 ** 64 - 1


def check_seed(seed):
    """Reject seeds outside the unsigned 64-bit range."""
    if seed is None or int(seed) != seed or not 0 <= int(seed) <= MAX_SEED:
        logging.error("Seeds must be unsigned 64-bit integers (got %s)" % seed)
        raise ValueError("Invalid seed: %s" % seed)
    return int(seed)


def trajectory_generator(master_seed, index, stream=RECORD_STREAM):
    """
    Return the generator of one trajectory.

    Parameters:

        master_seed (int): run seed.
        index (int): trajectory index inside the ensemble.
        stream (int): use of the seed, one of the *_STREAM constants.

    Returns:

        numpy.random.Generator: Philox generator keyed by the three integers.
    """
    key = np.random.SeedSequence([check_seed(master_seed), int(stream), int(index)])
    return np.random.Generator(np.random.Philox(key))


def chunk_ranges(n_items, chunk_size=CHUNK_SIZE):
    """Split range(n_items) into consecutive (start, stop) chunks."""
    return [(start, min(start + chunk_size, n_items)) for start in range(0, n_items, chunk_size)]
