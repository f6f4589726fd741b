"""photonbeat: quantum-jump simulation of few-photon interference with
frequency-mismatched single-photon sources.

Subpackages
-----------
qcore
    Dense states/operators on small labeled Hilbert spaces.
dynamics
    Conditional (no-click) evolution, Lindblad propagation, and the Monte
    Carlo wave-function trajectory sampler.
detector
    Finite-time-resolution detector cascade (Ready/Triggered sectors).
bkprotocol
    The two-round remote-entangling protocol in all detector regimes.
hom
    Two-photon interference of detuned sources.
oracles
    Monte Carlo cross-checks of every deterministic density.
cli
    The ``photonbeat`` experiment runner.
"""

__version__ = "0.1.0"

from . import bkprotocol, detector, dynamics, hom, oracles, qcore
from .qcore import DensityMatrix, HilbertSpace, Operator, StateVector

__all__ = [
    "__version__",
    "qcore",
    "dynamics",
    "detector",
    "bkprotocol",
    "hom",
    "oracles",
    "HilbertSpace",
    "StateVector",
    "Operator",
    "DensityMatrix",
]
