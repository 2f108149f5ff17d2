from typing_extensions import Final


__all__ = [  # pylint: disable=unused-variable
    "BEAM_BIAS",
    "BEAM_BIAS_STD",
    "BEAM_THERMAL_COVARIANCE",
    "BEAM_THERMAL_VARIANCE",
    "GATE_BOUNDARY_DOFS",
    "GATE_GAGES",
    "GATE_MODE_BAND",
    "GATE_TIMES",
    "MATERN_ORACLE_TOLERANCE",
    "PERIODIC_ORACLE_TOLERANCE",
    "PSD_TOLERANCE",
    "SYNTHETIC_ROWS"
]


BEAM_BIAS: Final = (2e-4, -2e-4, 1e-4)
BEAM_BIAS_STD: Final = (4.4e-5, 4.5e-5, 4.6e-5)
BEAM_THERMAL_VARIANCE: Final = 5e-9
BEAM_THERMAL_COVARIANCE: Final = 4.5e-9

GATE_BOUNDARY_DOFS: Final = 281 + 280
GATE_GAGES: Final = 14
GATE_MODE_BAND: Final = (20, 60)
GATE_TIMES: Final = 2200

MATERN_ORACLE_TOLERANCE: Final = 1e-8
PERIODIC_ORACLE_TOLERANCE: Final = 2e-5
PSD_TOLERANCE: Final = -1e-10

SYNTHETIC_ROWS: Final = 7200
