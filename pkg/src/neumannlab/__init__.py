"""Per-frequency spectral solver and verification lab for higher-order Neumann problems in the half-space."""
