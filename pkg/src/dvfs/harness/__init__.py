"""End-to-end driver: configuration, document store, corpora and benchmarks."""
