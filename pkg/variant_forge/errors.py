"""
Exception tree for variant_forge.

Every error carries the name of the component that raised it so the command
line can report module-qualified messages.
"""


class VariantForgeError(ValueError):
    """Base class for all domain errors"""

    module = "variant-forge"

    def qualified(self):
        return f"[{self.module}] {self}"


class NetParseError(VariantForgeError):
    module = "petri-core"

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{message} (at {location})"
        super().__init__(message)


class FiringError(VariantForgeError):
    module = "petri-core"


class PlayoutLimitError(VariantForgeError):
    module = "petri-core"


class VariantError(VariantForgeError):
    module = "variant-store"


class VariantFileError(VariantForgeError):
    module = "variant-store"

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({':'.join(where)})"
        super().__init__(message)


class CodecError(VariantForgeError):
    module = "variant-store"


class SplitError(VariantForgeError):
    module = "log-splitter"


class TrainingError(VariantForgeError):
    module = "seq-generator"

    def __init__(self, message, epoch=None):
        self.epoch = epoch
        if epoch is not None:
            message = f"{message} (epoch {epoch})"
        super().__init__(message)


class CheckpointError(VariantForgeError):
    module = "seq-generator"


class MetricError(VariantForgeError):
    module = "metrics"


class StatisticsError(VariantForgeError):
    module = "experiments"


class PlanError(VariantForgeError):
    module = "experiments"


class ReportError(VariantForgeError):
    module = "experiments"
