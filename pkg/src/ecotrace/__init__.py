"""ecotrace: energy and carbon accounting for GPU workloads.

Ingests GPU power telemetry (dmon-style logs or a live sampler),
reconstructs uniform 1 Hz power series, integrates energy in kWh,
converts it to CO2-equivalent mass with uncertainty from regional grid
intensity, and answers the follow-up questions: consistency audits,
architecture break-even horizons, annualized emissions, appliance
equivalence, and carbon impact statements.
"""

__version__ = "0.1.0"

from ecotrace.analytics import (  # noqa: F401
    DeviceProfile,
    RunRecord,
    annualize,
    appliance_equivalents,
    break_even,
    consistency_check,
)
from ecotrace.carbon import (  # noqa: F401
    CarbonContext,
    CarbonIntensity,
    EmissionEstimate,
    co2_emissions,
    intensity_stats,
    registry_lookup,
)
from ecotrace.report import carbon_statement, render_table  # noqa: F401
from ecotrace.store import RunStore  # noqa: F401
from ecotrace.telemetry import GpuSpec, PowerSample, parse_dmon_line  # noqa: F401
from ecotrace.timeseries import (  # noqa: F401
    PowerTrace,
    TraceSet,
    average_power,
    integrate_kwh,
    resample_1hz,
)
