import numpy as np

from detectleak.sketch import shingle_set_from_hashes


def make_set_pair(rng, true_j, union_size=600):
    """Construct two fingerprint sets with exact Jaccard true_j."""
    inter = round(true_j * union_size)
    union = rng.integers(0, 1 << 63, union_size, dtype=np.uint64)
    union = np.unique(union)
    while union.shape[0] < union_size:
        extra = rng.integers(0, 1 << 63, union_size, dtype=np.uint64)
        union = np.unique(np.concatenate([union, extra]))
    union = union[:union_size]
    shared = union[:inter]
    rest = union[inter:]
    half = (union_size - inter) // 2
    a = shingle_set_from_hashes(np.concatenate([shared, rest[:half]]))
    b = shingle_set_from_hashes(np.concatenate([shared, rest[half:]]))
    return a, b, inter / union_size
