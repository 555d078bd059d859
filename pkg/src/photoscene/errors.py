"""Exception hierarchy shared by parsers, writers and geometry helpers."""


class PhotosceneError(Exception):
    pass


class ParseError(PhotosceneError, ValueError):
    """Input bytes do not match the expected layout."""

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class UnrecognizedFormatError(ParseError):
    def __init__(self, path):
        self.path = path
        super().__init__(f"unrecognized format: {path}")


class UnsupportedCameraModelError(ParseError):
    def __init__(self, model, location=None):
        self.model = model
        super().__init__(f"unsupported camera model {model}", location)


class TruncatedDataError(ParseError):
    pass


class RepresentabilityError(PhotosceneError, ValueError):
    """The scene cannot be expressed in the requested target format."""


class InvalidRotationError(PhotosceneError, ValueError):
    pass


class DegenerateQuaternionError(PhotosceneError, ValueError):
    pass


class InvalidDepthError(PhotosceneError, ValueError):
    pass
