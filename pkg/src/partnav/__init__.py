"""partnav: part-level semantic discovery and latent-space editing for 3D
point clouds."""

__version__ = "0.1.0"
