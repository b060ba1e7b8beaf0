"""Exception types raised by the toolchain.

Everything derives from :class:`FPPGAError` so callers (the CLI in
particular) can separate domain failures from programming errors.
"""


class FPPGAError(Exception):
    """Base class for domain errors."""

    kind = "domain_error"


class NotUnitaryError(FPPGAError, ValueError):
    kind = "not_unitary"


class MeshError(FPPGAError, ValueError):
    """Invalid mesh, program or serialized document."""

    kind = "invalid_mesh"


class SchemaVersionError(MeshError):
    kind = "unknown_version"

    def __init__(self, version):
        super().__init__(f"unsupported schema version: {version!r}")
        self.version = version


class SingularSystemError(FPPGAError):
    """The network equations have no unique solution at some frequency."""

    kind = "singular_system"

    def __init__(self, frequency_hz, index=None):
        where = f"{frequency_hz!r} Hz"
        if index is not None:
            where += f" (grid index {index})"
        super().__init__(f"singular network system at {where}")
        self.frequency_hz = frequency_hz
        self.index = index


class NoPathError(FPPGAError):
    kind = "no_path"


class RouteConflictError(FPPGAError):
    kind = "route_conflict"

    def __init__(self, tbu):
        super().__init__(f"TBU {tbu} is already in use")
        self.tbu = tbu


class MultiRouteError(NoPathError):
    def __init__(self, index, cause):
        super().__init__(f"request {index} is infeasible: {cause}")
        self.index = index


class PresetError(FPPGAError):
    kind = "infeasible_preset"


class NonFiniteCostError(FPPGAError):
    kind = "non_finite_cost"

    def __init__(self, settings, value):
        super().__init__(f"objective returned {value!r} at settings {list(settings)!r}")
        self.settings = tuple(settings)
        self.value = value
