"""Exception types shared across the package."""


class GbcError(Exception):
    """Base class for all library errors."""


class ExprError(GbcError):
    """Tokenizer/parser/validation error with a source position."""

    def __init__(self, message, position, source=""):
        self.message = message
        self.position = position
        self.source = source
        super().__init__(self._render())

    def _render(self):
        if not self.source:
            return f"{self.message} (offset {self.position})"
        caret = " " * self.position + "^"
        return f"{self.message} (offset {self.position})\n  {self.source}\n  {caret}"


class JetDomainError(GbcError):
    """A transcendental function was evaluated outside its domain."""

    def __init__(self, func, value, index=None):
        self.func = func
        self.value = value
        self.index = index
        where = "" if index is None else f" (batch element {index})"
        super().__init__(f"{func} evaluated outside its domain at value {value!r}{where}")


class EvalError(GbcError):
    """Expression evaluation failed; carries source position and, when
    available, the chart point at which evaluation was attempted."""

    def __init__(self, message, position=None, source="", point=None):
        self.message = message
        self.position = position
        self.source = source
        self.point = point
        parts = [message]
        if position is not None:
            parts.append(f"at offset {position}")
        if source:
            parts.append(f"in {source!r}")
        if point is not None:
            parts.append(f"at point {tuple(point)}")
        super().__init__(" ".join(parts))


class SingularMetricError(GbcError):
    """Metric degenerate (or an intermediate division by a vanishing value)."""

    def __init__(self, message, point=None, det=None):
        self.point = point
        self.det = det
        extra = []
        if point is not None:
            extra.append(f"point {tuple(point)}")
        if det is not None:
            extra.append(f"det {det:.3e}")
        if extra:
            message = f"{message} ({', '.join(extra)})"
        super().__init__(message)


class ContractionPlanError(GbcError):
    """Invalid pairing passed to a tensor contraction."""


class ConfigError(GbcError):
    """Invalid or incomplete run configuration."""
