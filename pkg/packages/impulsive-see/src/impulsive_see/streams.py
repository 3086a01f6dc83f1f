"""
Reproducible random streams keyed by (seed, stream, path index).

Every Monte-Carlo path draws from its own generator, so the numbers a path sees
do not depend on which worker thread computed it or in what order.
"""

import numpy as np

# Stream identifiers keep independent uses of the same seed apart.
NOISE_STREAM = 0
AUDIT_STREAM = 1
PERTURBATION_STREAM = 2


def path_generator(seed: int, path_index: int, stream: int = NOISE_STREAM) -> np.random.Generator:
    """
    Build the generator for one path.

    Args:
        seed: User-level seed
        path_index: Index of the path (or iteration) within the run
        stream: Which use of the seed this is (noise, audits, perturbations)

    Returns:
        A numpy Generator seeded from SeedSequence(seed, spawn_key=(stream, path_index))
    """
    if seed < 0 or path_index < 0:
        raise ValueError(f"seed and path_index must be nonnegative, got {seed}, {path_index}")
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(stream, path_index))
    return np.random.default_rng(sequence)
