"""Exception hierarchy for fluxsim.

Every module raises a subclass of FluxsimError so that the engine can record a
failure per sweep point and keep going.
"""

from typing import List, Optional


class FluxsimError(Exception):
    """Base exception for all fluxsim errors"""
    pass


class CircuitError(FluxsimError):
    """Invalid circuit specification or failed circuit construction"""
    pass


class DiagonalizationError(CircuitError):
    """Eigen-solver did not converge"""
    pass


class DegeneratePotentialError(CircuitError):
    """Coupler effective Josephson energy is not positive"""
    pass


class DimensionMismatchError(CircuitError):
    """Operator dimension does not match the target subsystem"""
    pass


class EmptyProjectionError(CircuitError):
    """Energy cutoff removes every basis state"""
    pass


class LabelingError(FluxsimError):
    """Dressed-state labeling failure"""
    pass


class UnassignedLabelError(LabelingError):
    """A bare-product label has no dressed eigenstate"""
    def __init__(self, label: tuple):
        self.label = label
        super().__init__(f"Label {label} is not assigned in this spectrum")


class LabelingAmbiguityError(LabelingError):
    """Best overlap of a required label is below the ambiguity floor"""
    def __init__(self, label: tuple, overlap: float):
        self.label = label
        self.overlap = overlap
        super().__init__(f"Label {label} is ambiguous (best overlap {overlap:.3f})")


class EffectiveModelError(FluxsimError):
    """Perturbative model cannot be evaluated"""
    pass


class PoleError(EffectiveModelError):
    """Zero detuning in a perturbative denominator"""
    pass


class MissingConfigurationError(EffectiveModelError):
    """Neighbor configuration missing from a detuning map"""
    pass


class PulseError(FluxsimError):
    """Invalid pulse definition or evaluation"""
    pass


class PulseTimeError(PulseError):
    """Pulse evaluated outside its window"""
    pass


class CarrierMismatchError(PulseError):
    """Simultaneous drives do not share carrier and envelope"""
    pass


class VanishingMatrixElementError(PulseError):
    """Drive matrix element of the target transition is zero"""
    pass


class PropagationError(FluxsimError):
    """Time propagation failure"""
    pass


class StepSizeError(PropagationError):
    """Time step too large for the fastest drive oscillation"""
    pass


class NonFiniteStateError(PropagationError):
    """State vector acquired NaN or infinite entries"""
    pass


class MetricsError(FluxsimError):
    """Gate metric cannot be evaluated"""
    pass


class NotDiagonalDominantError(MetricsError):
    """Evolution operator has too much off-diagonal weight for a phase readout"""
    pass


class CalibrationError(FluxsimError):
    """Gate tune-up cannot start"""
    pass


class ConfigError(FluxsimError):
    """Run configuration failed schema validation"""
    def __init__(self, violations: List[str], path: Optional[str] = None):
        self.violations = violations
        self.path = path
        where = f" in {path}" if path else ""
        details = "\n  ".join(violations)
        super().__init__(f"{len(violations)} configuration error(s){where}:\n  {details}")
