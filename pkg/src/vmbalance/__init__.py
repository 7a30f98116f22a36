"""Load balancing of fixed-interval VM reservations on shared-capacity PMs."""

from .model import (
    PM_CATALOG, PmSpec, PmState, Schedule, SchedulerOutcome, SlotConfig, VmRequest,
    VmType, request_capacity_makespan, remove, try_place,
)
from .schedulers import SchedulerConfig, run_algorithm
from .workload import (
    SyntheticParams, WorkloadInstance, default_pm_pool, generate_synthetic,
    load_instance, parse_trace,
)

__version__ = "0.1.0"
