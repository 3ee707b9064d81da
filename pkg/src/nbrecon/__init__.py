"""Graph auto-encoder that reconstructs node neighborhoods.

Nodes are embedded so that the embedding of v can regenerate v's own
features, its degree, and the empirical distribution of its i-hop
neighbors' representations for every hop i up to the encoder depth.
Distribution reconstruction is scored with optimal-transport losses
(exact matching, Chamfer, or entropic Sinkhorn).
"""

__version__ = "0.1.0"
