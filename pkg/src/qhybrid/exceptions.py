"""Exception hierarchy shared by every qhybrid module."""


class QHybridError(Exception):
    """Base class for all library errors."""


# circuit construction
class CircuitError(QHybridError, ValueError):
    pass


class ArityMismatch(CircuitError):
    pass


class WireOutOfRange(CircuitError):
    pass


class OverlappingWires(CircuitError):
    pass


class OverlappingMeasurementWires(OverlappingWires):
    pass


class InvalidParameter(CircuitError):
    pass


class NoMatrixAvailable(CircuitError):
    pass


class NoDecompositionAvailable(CircuitError):
    pass


class NotGaussian(CircuitError):
    pass


class InvalidDistribution(QHybridError, ValueError):
    pass


# devices
class DeviceError(QHybridError):
    pass


class UnknownDevice(DeviceError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class DuplicateShortName(DeviceError):
    pass


class IncompatibleApiVersion(DeviceError):
    pass


class UnsupportedOperation(DeviceError):
    def __init__(self, name):
        super().__init__(f"operation {name!r} is not supported on this device")
        self.name = name


class UnsupportedObservable(DeviceError):
    def __init__(self, name):
        super().__init__(f"observable {name!r} is not supported on this device")
        self.name = name


class TooManyWires(DeviceError):
    pass


class SampleRequiresShots(DeviceError):
    pass


# differentiation
class GradientError(QHybridError):
    pass


class NotAnalyticallyDifferentiable(GradientError):
    pass


class NonDifferentiableMeasurement(GradientError):
    pass


class JacobianUnsupported(GradientError):
    """Raised by :func:`device_jacobian` when the device has no native Jacobian."""


class NonScalarCost(GradientError, ValueError):
    pass


class ShapeMismatch(QHybridError, ValueError):
    pass


class QuantumFunctionError(QHybridError):
    """A quantum function did something a circuit builder cannot record."""


# templates / collections
class TooManyFeatures(QHybridError, ValueError):
    pass


class InvalidGateEmission(QHybridError, ValueError):
    pass


class LengthMismatch(QHybridError, ValueError):
    pass


class ParseError(QHybridError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
