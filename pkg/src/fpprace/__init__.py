"""Monte Carlo laboratory for competing first-passage percolation.

Two infections (blue at rate beta, red at rate 1) race to capture the
vertices of a random d-regular graph or a torus.  The package simulates the
race three ways and checks them against each other and against closed-form
predictions:

- ``halfedge_chain``: the exact configuration-model half-edge chain
  (counts only, no explicit graph), including single-color warm starts.
- ``fpp_engine``: event-driven continuous-time races on explicit graphs
  (configuration-model multigraphs and tori) from ``graph_providers``.
- ``urn``: the companion finite Polya urn and weighted growth urns, with an
  exact small-instance DP oracle.
- ``theory``: closed-form final-share formulas, growth-exponent verdicts,
  conserved-quantity references.
- ``stats``: regression/distance/special-function utilities used by the
  verification suite.
- ``cli``: the ``fpprace`` command-line front door.
"""

__version__ = "0.1.0"

__all__ = [
    "halfedge_chain",
    "graph_providers",
    "fpp_engine",
    "urn",
    "theory",
    "stats",
    "cli",
]
