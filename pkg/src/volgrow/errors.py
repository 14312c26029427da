"""Exception hierarchy shared by every module.

Each error carries the module and operation that raised it plus the
offending input, so the CLI can emit a structured JSON record.
"""


class VolgrowError(Exception):
    kind = "error"

    def __init__(self, message, *, module=None, operation=None, offending=None):
        super().__init__(message)
        self.message = message
        self.module = module
        self.operation = operation
        self.offending = offending

    def to_record(self):
        return {
            "kind": self.kind,
            "message": self.message,
            "module": self.module,
            "operation": self.operation,
            "input": self.offending,
        }


class ArgumentError(VolgrowError, ValueError):
    kind = "argument"


class NumericalError(VolgrowError, ArithmeticError):
    kind = "numerical"


class ConvergenceError(NumericalError):
    kind = "convergence"


class ConfigError(VolgrowError):
    """Raised with every validation failure found, not only the first."""

    kind = "config"

    def __init__(self, failures, *, module="cli-reporting", operation="parse_config"):
        self.failures = list(failures)
        lines = "; ".join(
            f"line {f['line']}: {f['message']}" if f.get("line") else f["message"]
            for f in self.failures
        )
        super().__init__(lines or "invalid configuration", module=module, operation=operation)

    def to_record(self):
        record = super().to_record()
        record["failures"] = self.failures
        return record
