"""Discrete-event simulator for QoS-aware multipath routing in inter-WBAN networks.

Implements the QQMR protocol stack (Q-learning routing over three QoS classes,
weighted fuzzy c-means traffic clustering, adaptive multi-queue buffers, periodic
hello neighbor discovery) and a greedy geographic baseline on a shared radio,
energy, and MAC model.
"""

__version__ = "0.1.0"
