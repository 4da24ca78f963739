"""diffsentry: desk-scale transformer transient synthesis and classification.

Generates labeled 3-phase differential-current transients, detects events
with a cycle-difference change filter, extracts time/frequency features,
trains tree-ensemble classifiers from scratch, and runs a hierarchical
detect / locate / identify decision scheme.
"""

__version__ = "0.1.0"
