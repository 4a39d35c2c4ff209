"""
Exception hierarchy for the qroute toolkit

Library code raises these; only the CLI layer turns them into exit codes.
"""


class QRouteError(Exception):
    """Base class for every error raised by the toolkit"""


class ConfigError(QRouteError, ValueError):
    """Malformed environment or command-line configuration"""


class CircuitError(QRouteError, ValueError):
    """Invalid circuit file, gate or benchmark parameters"""


class TopologyError(QRouteError, ValueError):
    """Invalid or disconnected coupling graph"""


class RoutingError(QRouteError, ValueError):
    """Illegal transition, bad mapping or misbehaving policy"""


class AgentError(QRouteError):
    """Model construction, shape or numerical failure"""


class CheckpointError(AgentError):
    """Corrupt checkpoint or checkpoint/topology mismatch"""


class TrainingError(QRouteError):
    """Invalid training configuration or diverged training run"""


class VerificationError(RoutingError):
    """A routed circuit failed independent verification"""

    def __init__(self, report):
        super().__init__(f"routed circuit failed verification: {report.summary()}")
        self.report = report
