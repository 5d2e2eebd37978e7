# Custom Exceptions
class ScheduleFormatError(Exception):
    """Raised when a schedule or region file row cannot be parsed."""
    def __init__(self, line: int, detail: str):
        self.line = line
        self.detail = detail
        super().__init__(f"line {line}: {detail}")


class ChronologyError(Exception):
    """Raised when a driver schedule breaks its ordering invariants."""
    def __init__(self, driver_id: int, violations: list):
        self.driver_id = driver_id
        self.violations = violations
        first = violations[0] if violations else "unknown violation"
        super().__init__(
            f"driver {driver_id}: {len(violations)} schedule violation(s), first: {first}"
        )


class UnknownRegionError(Exception):
    """Raised when an event or charging record references a region not in the metadata."""
    def __init__(self, region_id: str):
        self.region_id = region_id
        super().__init__(f"Unknown region id '{region_id}'")


class ConfigError(Exception):
    """Raised for invalid or unknown configuration keys."""
    def __init__(self, key: str, detail: str, line: int | None = None):
        self.key = key
        self.detail = detail
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"config key '{key}'{where}: {detail}")


class BatteryAssignmentError(Exception):
    """Raised when batteries cannot be assigned (e.g. empty fleet)."""
    pass


class FlexibilityPreconditionError(Exception):
    """Raised when an event that fails the flexibility filter is quantified."""
    def __init__(self, driver_id: int, parking_index: int, detail: str):
        self.driver_id = driver_id
        self.parking_index = parking_index
        super().__init__(f"driver {driver_id}, parking {parking_index}: {detail}")


class InvariantViolationError(Exception):
    """Raised when inputs or outputs break a cross-file or numerical invariant."""
    def __init__(self, check: str, detail: str):
        self.check = check
        self.detail = detail
        super().__init__(f"{check}: {detail}")
