"""Exception hierarchy shared across the package."""


class KmsError(Exception):
    """Base class for all package-specific errors."""


class InvalidMagnetization(KmsError):
    """Magnetization out of range or with the wrong parity for the site count."""


class SectorMissing(KmsError):
    """A required magnetization sector is unavailable."""


class SpinLabelFailure(KmsError):
    """An eigenvector's <S^2> does not round to a half-integer spin."""


class EmptySpinSubspace(KmsError):
    """No eigenstate with the requested spin quantum number."""


class EmptyWindow(KmsError):
    """The energy window around the thermal energy contains no eigenstates."""


class CacheError(KmsError):
    """Base class for eigensystem cache problems."""


class CorruptCache(CacheError):
    """Cache file is truncated, has a bad magic, or an unreadable header."""


class ChecksumMismatch(CacheError):
    """Cache payload does not match its recorded checksum."""


class VersionMismatch(CacheError):
    """Cache file was written with an unsupported format version."""


class MissingCache(CacheError):
    """A required cache file does not exist."""


class BottomComponent(KmsError):
    """Attempted to lower the q = -k component of a spherical tensor."""


class TopComponent(KmsError):
    """Attempted to raise the q = +k component of a spherical tensor."""


class ZeroDenominator(KmsError):
    """The q=0 reference Clebsch-Gordan coefficient vanishes; transport undefined."""


class NoBinsInRange(KmsError):
    """A log-ratio curve has no defined bins inside the analysis range."""


class GridMismatch(KmsError):
    """Two curves or correlators do not share a frequency grid."""


class EmptySpectrum(KmsError):
    """A partition sum was requested over an empty spectrum."""


class InvalidSpin(KmsError):
    """Spin quantum number out of range or with the wrong parity."""


class BoundarySpin(KmsError):
    """Finite difference in s requested at the edge of the allowed spin range."""
