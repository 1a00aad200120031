"""
SpikeCP: delay-adaptive set classification for spiking neural networks.

A deterministic SRM/LIF inference engine wrapped by split conformal
prediction, the DC-SNN adaptive point-classifier baseline, and a harness
that checks the coverage guarantee by Monte Carlo on synthetic data.
"""

__version__ = "0.3.0"
