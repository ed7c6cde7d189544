"""Virtual-particle CIC deposition on block-decomposed uniform meshes."""

__version__ = "0.1.0"
