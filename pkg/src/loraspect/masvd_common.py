"""Constants shared between the reference fit path and the compiled kernels."""

# Entries whose |u_i * v_j| falls at or below this never enter a weighted
# median: their ratios are numerically meaningless. They still count toward
# selection objectives.
WEIGHT_FLOOR = 1e-12
