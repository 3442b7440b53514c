"""Gradient-free neural network training by alternating minimization.

The package trains fully-connected classifiers without gradient steps:
every layer update is an exact least-squares solve or a closed-form
one-dimensional minimization, coordinated by an augmented-Lagrangian
outer loop.  A data-parallel runtime distributes the work across worker
threads using Gram-matrix reductions whose message sizes are independent
of the number of training samples.
"""

__version__ = "0.1.0"
