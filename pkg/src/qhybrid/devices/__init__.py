from .base import (
    API_VERSION, Device, DeviceConfig, DeviceDescriptor, QubitDevice, api_compatible, device,
    list_devices, load_device, register_device, sample_basis_states, unregister_device,
)
from .default_gaussian import DefaultGaussian, GaussianState
from .default_qubit import DefaultQubit

register_device(DefaultQubit)
register_device(DefaultGaussian)
