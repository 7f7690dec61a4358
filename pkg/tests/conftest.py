# Keeps this directory importable (tests import the shared `oracles` module).
