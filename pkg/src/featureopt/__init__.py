"""Feature-engineering experiments for multilayer perceptrons.

Genetic-algorithm wrapper feature selection, PCA dimensionality reduction
and a from-scratch numpy MLP, with a runner that compares the three on
tabular datasets.
"""
__version__ = "0.1.0"
