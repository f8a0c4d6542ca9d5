"""Bayesian sample-size determination for bearing vibration feature populations.

Modules
-------
signals      synthetic four-class bearing vibration records and signal CSV I/O
features     time-domain statistical features and the labeled feature table
dtree        entropy-based decision tree, evaluation protocols, feature ranking
bayes_ssd    posterior updating and closed-form / iterative sample sizes
experiments  table and figure suites written as CSV and SVG
cli          ``bearing-ssd`` command line entry point
"""

__version__ = "0.1.0"
