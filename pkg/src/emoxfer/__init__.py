"""emoxfer: CNN+LSTM multi-domain network with feature-transference experiments.

Everything is deterministic from a master seed, trains on one CPU core,
and carries its own gradient checks.
"""

__version__ = "0.1.0"
