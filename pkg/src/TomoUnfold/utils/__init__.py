from .app_versions import (
    get_app_version,
    get_host_platform,
    get_lib_versions,
    get_runtime_information,
    get_stack_versions,
)

__all__ = [
    "get_app_version",
    "get_host_platform",
    "get_lib_versions",
    "get_runtime_information",
    "get_stack_versions",
]
