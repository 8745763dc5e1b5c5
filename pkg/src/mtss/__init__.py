"""Toolkit for linear multiple-threshold secret-sharing schemes.

A structure fixes N participants and a family of secrets grouped into
sub-arrays, each sub-array with its own reconstruction threshold (thresholds
strictly decrease from one sub-array to the next).  The package builds linear
schemes for such structures over prime fields, verifies the defining rank
conditions (weak or strong secrecy), measures share-size and randomness
ratios exactly, audits converse bounds, and bounds the optimal ratios from
below with exact rational linear programs over the polymatroid (Shannon) cone.
"""

__version__ = "0.1.0"
