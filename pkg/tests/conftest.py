import numpy as np
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from aqtree.topology import TreeNetwork

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def trees(draw, min_n=1, max_n=10, max_c=3):
    """Random recursive trees rooted at 0 with a drawn capacity."""
    n = draw(st.integers(min_n, max_n))
    c = draw(st.integers(1, max_c))
    parents = [None] + [draw(st.integers(0, i - 1)) for i in range(1, n)]
    return TreeNetwork(tuple(parents), c)


@st.composite
def configurations(draw, max_n=10, max_c=3, max_mult=3):
    """(tree, loads) with the sink empty and loads up to max_mult*c + 1."""
    net = draw(trees(min_n=2, max_n=max_n, max_c=max_c))
    top = max_mult * net.capacity + 1
    loads = [0 if v == net.root else draw(st.integers(0, top)) for v in range(net.n)]
    return net, loads


def rng(seed=0):
    return np.random.default_rng(seed)
