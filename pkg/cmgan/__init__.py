"""Conformer-based metric GAN for speech enhancement (denoising, dereverberation, super-resolution)"""

__version__ = "1.0.0"
