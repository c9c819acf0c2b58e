"""Modeling and analysis toolkit for cavity electro-optic microwave-optical transducers."""
__version__ = "0.1.0"

from .device import (CouplingDistanceModel, DeviceParams, OperatingPoint, ResonatorMode, cooperativity,
                     reference_device, pump_photon_number)
from .noise import NoiseBaths, NoiseSpectrum, RadiometerPoint
from .physics import AngularFrequency, PowerDb, planck_occupation
from .transduction import (CalibrationChain, SParamSet, bandwidth, conversion_matrix, eta_internal,
                           eta_total, self_calibrated_efficiency)
