"""Classical simulation of ancilla-assisted lowest-eigenstate amplification."""
from .errors import EigenampError
from .spectrum import (
    ComputationalState,
    InitialOverlaps,
    RotationMatrix,
    Spectrum,
    make_ladder_spectrum,
    make_random_rotation,
    make_random_spectrum,
    overlaps_from_state,
    su_generators,
    uniform_overlaps,
    uniform_state,
)
from .spectral import AmplifierState, RunConfig, RunResult, iterate, run_until

__version__ = "0.1.0"
