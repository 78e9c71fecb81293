"""Pointing-error budgeting for flexible spacecraft.

Core workflow: characterize error sources, propagate them through an LTI
closed-loop model, apply the pointing-index weighting, and combine the
per-source contributions statistically into a budget.  An optional
worst-case layer maximizes variance / peak gain / DC gain over a box of
uncertain plant parameters.
"""

__version__ = "0.1.0"

RNG_ALGORITHM = "numpy.random.PCG64"
