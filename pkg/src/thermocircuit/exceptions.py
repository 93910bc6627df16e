"""Exception hierarchy.

Every error carries the name of the module that raised it so that the CLI
can produce module-tagged messages and map error classes to exit codes.
"""


class ThermoCircuitError(Exception):
    """Base class for all errors raised by the package."""

    module = "thermocircuit"

    def __init__(self, *args, module=None):
        super().__init__(*args)
        if module is not None:
            self.module = module

    def __str__(self):
        return f"[{self.module}] {super().__str__()}"


class CircuitError(ThermoCircuitError, ValueError):
    module = "circuit_core"


class AssemblyError(ThermoCircuitError, ValueError):
    module = "assembler"


class SelfLoopError(AssemblyError):
    pass


class SingularityError(ThermoCircuitError, ArithmeticError):
    """Raised when a conduction block that must be inverted is singular."""

    module = "statespace"


class NoStatesError(ThermoCircuitError, ValueError):
    module = "statespace"


class InputBindingError(ThermoCircuitError, ValueError):
    module = "simulator"


class StabilityError(ThermoCircuitError, ArithmeticError):
    module = "simulator"


class ParseError(ThermoCircuitError, ValueError):
    """Error in a building description or time-series file.

    ``line`` and ``column`` are 1-based and may be None when the location
    cannot be determined.
    """

    module = "cli_app"

    def __init__(self, message, path=None, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        loc = ""
        if path is not None:
            loc = str(path)
        if line is not None:
            loc += f":{line}:{column if column is not None else 1}"
        super().__init__(f"{loc}: {message}" if loc else message)
