"""Time-of-arrival measurement simulator in the quantum Zeno regime."""


class ZenoArrivalError(Exception):
    """Generic exception."""


class GridError(ZenoArrivalError):
    """Spatial grid exception."""


class PacketError(ZenoArrivalError):
    """Wave packet exception."""


class NegativeMomentumError(PacketError):
    """State has negative-momentum support where it is not allowed."""


class ScheduleError(ZenoArrivalError):
    """Measurement schedule exception."""


class BoundaryLeakError(ZenoArrivalError):
    """Norm reached the periodic grid boundary during a run."""


class NothingDetectedError(ZenoArrivalError):
    """Detection record holds no detected norm to normalize."""


class DistributionError(ZenoArrivalError):
    """Arrival-time distribution exception."""


class SweepError(ZenoArrivalError):
    """Coupling sweep exception."""


class ScenarioError(ZenoArrivalError):
    """Scenario configuration exception."""


class BoundViolationError(ZenoArrivalError):
    """Commutator bound failed at a sampled time."""
