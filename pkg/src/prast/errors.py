class PrastError(Exception):
    """Base class for all errors raised by prast."""


class ConfigError(PrastError):
    pass


class ConfigMismatch(ConfigError):
    """Render mode is missing a required sub-config (scan axis, foveation map)."""


class NonPositiveW(PrastError):
    """A point projected with w <= 0; the caller skipped near-plane handling."""


class NotMonotone(PrastError):
    pass


class NoCatchUp(PrastError):
    """The rolling scan never meets the vertex inside [0, 1]."""


class DimensionMismatch(PrastError):
    pass


class EmptyMask(PrastError):
    pass


class SceneError(ConfigError):
    pass


class ParseError(SceneError):
    def __init__(self, msg, path=None, line=None, field=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{': '.join(where)}: {msg}" if where else msg)
        self.path, self.line, self.field = path, line, field


class MissingFile(SceneError):
    def __init__(self, path):
        super().__init__(f"missing file: {path}")
        self.path = path


class NonFiniteVertex(SceneError):
    pass
