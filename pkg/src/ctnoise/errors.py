"""Exception hierarchy shared across the toolkit."""


class CtNoiseError(Exception):
    """Base class for all toolkit errors."""


class MissingFile(CtNoiseError):
    pass


class SidecarMismatch(CtNoiseError):
    pass


class NonFinitePixel(CtNoiseError):
    pass


class IoFailure(CtNoiseError):
    pass


class BadMagic(CtNoiseError):
    pass


class UnsupportedMaxval(CtNoiseError):
    pass


class RoiOutOfBounds(CtNoiseError):
    pass


class DimensionMismatch(CtNoiseError):
    pass


class ImageTooSmall(CtNoiseError):
    pass


class MalformedPyramid(CtNoiseError):
    pass


class MissingDose(CtNoiseError):
    pass


class DegenerateHighVariance(CtNoiseError):
    pass


class InvalidParams(CtNoiseError):
    pass


class Mismatch(CtNoiseError):
    pass


class EmptyAxis(CtNoiseError):
    pass


class AllDegenerate(CtNoiseError):
    pass


class MissingBaseline(CtNoiseError):
    pass
