"""serrekit: exact construction of rank-r vector bundles from codimension-two
subscheme data over the standard cover, with Cech obstruction handling,
correction, uniqueness comparison, and an exhaustive exact verifier."""

__version__ = "0.1.0"
