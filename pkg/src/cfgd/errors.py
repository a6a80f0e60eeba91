"""Exception hierarchy shared by all modules."""


class CfgdError(Exception):
    """Base class for every error raised by the package."""


class ParseError(CfgdError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class ArityError(CfgdError):
    pass


class UnknownRelationError(CfgdError):
    pass


class SizeLimitError(CfgdError):
    pass


class DecompositionError(CfgdError):
    pass


class UncoveredFactError(DecompositionError):
    def __init__(self, fact):
        self.fact = fact
        super().__init__(f"fact {fact} is not covered by any bag")


class DisconnectedElementError(DecompositionError):
    def __init__(self, element, bag1, bag2):
        self.element = element
        self.bags = (bag1, bag2)
        super().__init__(
            f"bags containing element {element!r} are not connected "
            f"(witnesses: bags {bag1!r} and {bag2!r})"
        )


class WidthExceededError(CfgdError):
    pass


class MalformedEncodingError(CfgdError):
    pass


class ProgramError(CfgdError):
    """Semantic error in a Datalog program (range restriction, negation, arity)."""


class NotStratifiableError(CfgdError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("program is not stratifiable; negative cycle: " + " -> ".join(self.cycle))


class NotCFGError(CfgdError):
    pass


class UnguardedNegationError(CfgdError):
    pass


class NotMonotoneError(CfgdError):
    pass


class NegationCycleError(CfgdError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cycle through a NOT gate: " + " -> ".join(map(str, self.cycle)))


class AlphabetMismatchError(CfgdError):
    pass


class NotSimplicialError(CfgdError):
    pass


class NotAlphaAcyclicError(CfgdError):
    pass


class NotStronglyAcyclicError(CfgdError):
    pass


class NotNormalFormError(CfgdError):
    pass
