"""eyebench: ophthalmology LLM curation and benchmarking harness."""

__version__ = "0.1.0"
