"""Free moment maps, free Stein kernels and related numerics."""
