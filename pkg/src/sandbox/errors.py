"""Exception hierarchy shared across the package."""


class SandboxError(Exception):
    """Base class for all package-specific errors."""


class NameCollision(SandboxError):
    pass


class UnknownReference(SandboxError):
    pass


class CycleDetected(SandboxError):
    pass


class MalformedDocument(SandboxError):
    pass


class PlanCheckError(SandboxError):
    """Base for plan type-checking failures."""


class UnknownFunction(PlanCheckError):
    def __init__(self, name):
        super().__init__(f"unknown function {name!r}")
        self.name = name


class UnknownLiteral(PlanCheckError):
    def __init__(self, function_name, param_index, type_name, canonical_name):
        super().__init__(
            f"unknown literal {type_name}.{canonical_name} "
            f"(argument {param_index} of {function_name})"
        )
        self.function_name = function_name
        self.param_index = param_index
        self.type_name = type_name
        self.canonical_name = canonical_name


class ArityMismatch(PlanCheckError):
    def __init__(self, function_name, expected, found):
        super().__init__(f"{function_name} expects {expected} argument(s), got {found}")
        self.function_name = function_name
        self.expected = expected
        self.found = found


class TypeMismatch(PlanCheckError):
    def __init__(self, function_name, param_name, expected, found):
        expected_txt = "|".join(expected)
        super().__init__(
            f"argument {param_name!r} of {function_name} expects {expected_txt}, got {found}"
        )
        self.function_name = function_name
        self.param_name = param_name
        self.expected = expected
        self.found = found


class PlanSyntaxError(SandboxError):
    pass


class BackendUnavailable(SandboxError):
    pass


class MalformedResponse(SandboxError):
    pass


class DuplicateName(SandboxError):
    pass


class GroundingTypeMismatch(SandboxError):
    pass


class EmptyDecomposition(SandboxError):
    pass


class UnliftableAmbiguity(SandboxError):
    pass


class UngroundedObject(SandboxError):
    def __init__(self, canonical_name):
        super().__init__(f"no grounding registered for ObjectRef.{canonical_name}")
        self.canonical_name = canonical_name


class DegenerateDemo(SandboxError):
    pass


class TooShortDemo(SandboxError):
    pass


class NonFiniteState(SandboxError):
    pass


class UserCancelled(SandboxError):
    pass


class CorruptLog(SandboxError):
    pass


class ReplayDivergence(SandboxError):
    pass
