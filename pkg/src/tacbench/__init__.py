"""tacbench: vision-based tactile sensor benchmarking toolkit."""

__version__ = "0.1.0"
