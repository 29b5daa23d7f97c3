"""Python access to the DeepWiFi simulator core."""

from ._deepwifi import (
    __version__,
    adaptive_update,
    adaptive_utility,
    apply_impairments,
    backpressure_select,
    gen_wifi,
    link_rate,
    lpi_power,
    mcs_rate,
    mcs_select,
    p_jam_grid,
    simulate,
    sweep,
)

__all__ = [
    "__version__",
    "adaptive_update",
    "adaptive_utility",
    "apply_impairments",
    "backpressure_select",
    "gen_wifi",
    "link_rate",
    "lpi_power",
    "mcs_rate",
    "mcs_select",
    "p_jam_grid",
    "simulate",
    "sweep",
]
