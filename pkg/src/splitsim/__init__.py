"""splitsim: split-learning protocol simulator with feature-space hijacking
attacks, property inference, GAN-based client attacks, and defense evaluation.
"""

__version__ = "0.1.0"
