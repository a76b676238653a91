import hashlib

import numpy as np

SEED_BITS = 63


def derive_seed(base_seed, *labels):
    """
    Derives a component seed from the base seed and a path of labels,
    e.g. derive_seed(7, "train", "pb_system_1_5", "70/30", 100).

    Seeds depend only on the label path, never on the order in which
    components ask for them.
    """

    path = "/".join([str(int(base_seed))] + [str(label) for label in labels])
    digest = hashlib.sha256(path.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & ((1 << SEED_BITS) - 1)


def make_rng(seed, *labels):
    if labels:
        return np.random.default_rng(derive_seed(seed, *labels))
    return np.random.default_rng(int(seed) & ((1 << 64) - 1))
