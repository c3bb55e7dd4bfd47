"""Exception hierarchy. Every error is also a ValueError so callers can catch broadly."""


class TnnflError(ValueError):
    pass


class InvalidDimension(TnnflError):
    pass


class UnsupportedDimension(TnnflError):
    pass


class SizeOverflow(TnnflError):
    pass


class InvalidShape(TnnflError):
    pass


class StateTooLarge(TnnflError):
    pass


class DegenerateState(TnnflError):
    pass


class InvalidK(TnnflError):
    pass


class InvalidW(TnnflError):
    pass


class TooManyConfigs(TnnflError):
    pass


class EnumerationCap(TnnflError):
    pass


class OutsideConvergenceDomain(TnnflError):
    pass


class InvalidTrainingSet(TnnflError):
    pass


class InvalidInput(TnnflError):
    pass


class CannotBuildIndependentSet(TnnflError):
    pass


class DegenerateTrainingSet(TnnflError):
    pass
