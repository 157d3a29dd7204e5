"""Semi-wave pairs and two-front Stefan free boundary runs in time-periodic media."""

from semifront.nonlinearity import (
    Nonlinearity,
    ClassificationReport,
    kpp_logistic,
    monostable_nonkpp,
    bistable_cubic,
    custom_nonlinearity,
    classify,
    a0,
    theta_star,
)

__version__ = "0.1.0"
