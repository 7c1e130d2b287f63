"""Exception hierarchy shared by the numerical modules and the CLI."""


class QPJacobiError(Exception):
    """Base class for all library errors."""


class NumericalDegeneracy(QPJacobiError):
    """Base class for failures caused by (near) zeros of the off-diagonal b."""


class DegenerateProduct(NumericalDegeneracy):
    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"transfer product collapsed to zero at step {step}")


class NearSingularSamplingFunction(NumericalDegeneracy):
    def __init__(self, step, value, floor):
        self.step = step
        self.value = value
        self.floor = floor
        super().__init__(
            f"|b| = {value:.3e} below floor {floor:.1e} at orbit step {step}; perturb the phase"
        )


class TooManyDegenerateSamples(NumericalDegeneracy):
    def __init__(self, dropped_measure, limit=0.01):
        self.dropped_measure = dropped_measure
        self.limit = limit
        super().__init__(
            f"{dropped_measure:.3%} of phase samples hit zeros of b (limit {limit:.0%})"
        )


class PositivityViolated(QPJacobiError):
    def __init__(self, energies, values, tolerance):
        self.energies = list(energies)
        self.values = list(values)
        self.tolerance = tolerance
        listing = ", ".join(f"E={e:.6g} (L={v:.3e})" for e, v in zip(self.energies, self.values))
        super().__init__(f"Lyapunov exponent not above {tolerance:g} at: {listing}")


class InsufficientData(QPJacobiError, ValueError):
    """Not enough pairs/cells to fit a regression."""


class DeterminantTooLarge(QPJacobiError):
    def __init__(self, index, det):
        self.index = index
        self.det = det
        super().__init__(f"|det A_{index + 1}| = {abs(det):.12g} exceeds 1")


class HypothesesNotMet(QPJacobiError):
    pass


class ConfigError(QPJacobiError, ValueError):
    pass
