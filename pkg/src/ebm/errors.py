"""Exception hierarchy shared by the library and the command line."""


class EbmError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(EbmError, ValueError):
    """Array shapes do not agree with the model dimensions."""


class InvariantError(EbmError, ValueError):
    """A parameter container violates one of its structural invariants."""


class UnsupportedFamilyError(EbmError, ValueError):
    """The requested operation is not defined for this unit family."""


class DataValidationError(EbmError, ValueError):
    """Input data does not conform to the declared unit family or format."""


class ConfigError(EbmError, ValueError):
    """Training or sampling configuration is invalid."""


class CapacityError(EbmError):
    """Exact enumeration was requested beyond the configured bit budget."""


class ModelFormatError(EbmError, ValueError):
    """A model file could not be parsed.

    ``field`` names the offending entry of the document.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ModelVersionError(ModelFormatError):
    """A model file was written with an unsupported format version."""
