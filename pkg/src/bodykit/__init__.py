"""bodykit: synthetic human body datasets with measurement ground truth.

Pipeline: parametric body generation -> skeleton-guided annotation of 16
measurements -> two-view virtual scanning and 2D rendering -> dataset
assembly -> k-fold evaluation of measurement estimators.
"""

__version__ = "0.1.0"
