"""Small and giant emitters on a 1D cross-stitch (flat-band) lattice."""

__version__ = "0.1.0"
