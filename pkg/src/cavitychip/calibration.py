"""Fixed noise-profile constants.

``DARK_RATE_HZ`` is the per-detector dark-count rate that makes the simulated
HBT measurement give g2(0) = 0.15; it is recomputed by
``experiments.calibrate_dark_rate`` and checked by the tests.
"""

#: Dark counts per second per detector (bisection on the HBT g2(0), seed 2024).
DARK_RATE_HZ = 4550.0

#: Probability that the two photons of a pair enter with orthogonal
#: polarizations. Equivalent to a mean |<xi1|xi2>|^2 of 0.85 between the
#: photons, independent of detection time.
MISMATCH_PROBABILITY = 0.15

#: Target |<xi1|xi2>|^2 for the two-photon interference run.
HOM_OVERLAP = 0.85

#: Illustrative fabrication errors on the CNOT couplers. An example input
#: for sensitivity studies, not a fit to any chip.
PERTURBED_COUPLERS = {
    "etas": (0.31, 0.355, 0.32),
    "balanced": (0.47, 0.53),
    "phis": (0.0, 0.05, -0.08, 0.04, 0.1),
}
