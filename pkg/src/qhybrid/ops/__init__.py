from .cv import (
    CV_OBSERVABLES, CV_OPERATIONS, P, X, Beamsplitter, Displacement, NumberOperator, PolyXP,
    QuadOperator, QuadraticPhase, Rotation, Squeezing, TwoModeSqueezing,
)
from .qubit import (
    CNOT, CZ, QUBIT_OBSERVABLES, QUBIT_OPERATIONS, RX, RY, RZ, BasisState, Hadamard, Hermitian,
    Identity, PauliX, PauliY, PauliZ, PhaseShift, QubitUnitary, Rot, S, T,
)
