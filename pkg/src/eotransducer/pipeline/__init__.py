"""Trace I/O, scenario configuration, analysis commands and reports."""
from .commands import (cmd_calibrate, cmd_fit, cmd_report, cmd_simulate, cmd_sweep, cmd_synth,
                       simulate_row, unit_cooperativity_power)
from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .report import Report, ReportInvariantError, load_report, save_report, write_report_files
from .traces import (MalformedTraceError, NonMonotoneError, SpectrumTrace, TraceError, TraceKind,
                     UnitMismatchError, load_radiometer, load_trace, save_radiometer, save_trace)
