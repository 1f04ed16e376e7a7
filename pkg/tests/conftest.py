import numpy as np
import pytest

from aespectra import rmt


class LawCache:
    """Session-wide memo of sampled ensemble spectra (they are expensive)."""

    def __init__(self):
        self._memo = {}

    def _get(self, key, builder):
        if key not in self._memo:
            self._memo[key] = builder()
        return self._memo[key]

    def circular(self, n: int, seed: int) -> np.ndarray:
        return self._get(("circ", n, seed), lambda: rmt.circular_law_spectrum(n, seed))

    def wigner(self, n: int, seed: int) -> np.ndarray:
        return self._get(("wig", n, seed), lambda: rmt.semicircle_spectrum(n, seed))

    def product(self, n: int, m: int, seed: int) -> np.ndarray:
        return self._get(("prod", n, m, seed),
                         lambda: rmt.product_square_spectrum(n, m, seed))

    def chain(self, dims: tuple, seed: int) -> np.ndarray:
        return self._get(("chain", dims, seed),
                         lambda: rmt.rect_chain_spectrum(rmt.ChainSpec(dims), seed))


@pytest.fixture(scope="session")
def laws() -> LawCache:
    return LawCache()
