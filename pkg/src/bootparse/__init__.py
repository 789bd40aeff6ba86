"""Unsupervised constituency parsing from bootstrapped span classifiers.

The pipeline: template seeds over raw text -> inside span classifier ->
self-training -> inside/outside co-training -> chart decoding -> F1
evaluation against gold treebanks.
"""

__version__ = "0.1.0"
