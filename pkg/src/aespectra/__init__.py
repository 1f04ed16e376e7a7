"""Spectral analysis of autoencoder latent Jacobians and random-matrix baselines."""

__version__ = "0.1.0"
