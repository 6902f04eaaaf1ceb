from .eventlog import EventLog
from .runtime import StudyRuntime
from .server import build_runtime, create_app, serve
from .storage import export_dataset, read_study_config, write_study_config

__all__ = [
    "EventLog",
    "StudyRuntime",
    "build_runtime",
    "create_app",
    "export_dataset",
    "read_study_config",
    "serve",
    "write_study_config",
]
