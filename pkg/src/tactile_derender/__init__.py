"""Tactile de-rendering toolkit.

Simulates rigid contact against a deformable visio-tactile sensor, trains a
conditional denoising-diffusion model that reconstructs in-contact object
depth from tactile signatures, and estimates planar object pose (with
uncertainty) from the reconstructions.
"""

__version__ = "0.1.0"
