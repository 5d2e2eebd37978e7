# location charging rates
from typing import Optional

from evflex.core.config import ChargingRates
from evflex.schemas.fleet import LocationPurpose

DEFAULT_RATES = ChargingRates()


def rate_for_purpose(purpose: LocationPurpose, rates: Optional[ChargingRates] = None) -> float:
    """Charging power in kW: Home 7, Work 11, Leisure/Shop/Other 22 unless overridden."""
    return (rates or DEFAULT_RATES).for_purpose(purpose)
