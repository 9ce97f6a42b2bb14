"""Exception hierarchy shared across the toolkit."""


class QSwitchError(Exception):
    """Base class for all toolkit errors."""


class ParamError(QSwitchError):
    """Invalid or inconsistent physical parameters."""


class ScheduleError(QSwitchError):
    """Malformed control schedule (gaps, overlaps, bad segment)."""


class PulseError(QSwitchError):
    """Malformed input pulse (empty, zero norm, bad grid)."""


class ConfigError(QSwitchError):
    """Invalid run configuration (unknown keys, missing values, bad JSON)."""


class NumericalFailure(QSwitchError):
    """Integration produced an untrustworthy result (ledger violation, instability)."""
