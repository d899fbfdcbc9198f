"""fluxsim

Simulation and calibration of star-coupled fluxonium qubits with transmon
tunable couplers, and of microwave-activated multi-controlled-Z gates.
"""

__version__ = "1.0.0"
