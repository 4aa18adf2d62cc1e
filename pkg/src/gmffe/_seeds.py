import numpy as np


def derive_seed(master: int, *index: int) -> int:
    """Deterministic child seed for repetition ``index`` of a run seeded ``master``."""
    return int(np.random.SeedSequence([int(master), *map(int, index)]).generate_state(1)[0])
