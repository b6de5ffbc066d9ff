"""Exception types shared across the engines."""


class DynamicsError(Exception):
    """Base class for engine-level failures (CLI exit code 3)."""


class DegenerateSurfaces(DynamicsError):
    """Adiabatic gap fell below the degeneracy floor; the point is unusable."""


class GaugeAmbiguity(DynamicsError):
    """Successive eigenvector overlap too small to fix the sign gauge."""


class MixedDirection(DynamicsError):
    """Jump composition attempted across different coupling directions."""


class PatternMismatch(DynamicsError):
    """Jump sequence does not match any known composition identity."""


class DegeneratePopulation(DynamicsError):
    """Active-state population too small to define a hop probability."""


class EmptyEnsemble(DynamicsError):
    """Estimator asked to average over zero walkers."""


class BranchExplosion(DynamicsError):
    """Exhaustive path enumeration would exceed the allowed depth."""


class BadSupport(DynamicsError):
    """Wavepacket has non-negligible amplitude at the grid boundary."""


class ConfigError(Exception):
    """Invalid or malformed run configuration (CLI exit code 2)."""
