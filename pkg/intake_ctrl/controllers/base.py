from abc import ABC, abstractmethod
from typing import NamedTuple, Tuple

from intake_ctrl.controllers.allocation import (ValveCommandSet,
                                                saturate_and_rate_limit,
                                                saturation_flags)


class ControllerOutput(NamedTuple):
    """ Commands applied on one tick, with the signals recorded alongside.

    Controllers without an observer or coordinator leave those fields NaN.
    """

    commands: ValveCommandSet
    saturated: Tuple[bool, bool, bool]
    z13: float = float('nan')
    z23: float = float('nan')
    grad_l1: float = float('nan')
    grad_l2: float = float('nan')
    gamma: float = float('nan')
    L: float = float('nan')


class PressureController(ABC):

    def __init__(self, trim: ValveCommandSet, dt: float, rate_max: float):

        self.trim = ValveCommandSet(*trim)
        self.dt = dt
        self.rate_max = rate_max
        self.previous = self.trim

    @abstractmethod
    def compute(self, measured: Tuple[float, float],
                setpoints: Tuple[float, float]) -> Tuple[ValveCommandSet,
                                                         dict]:
        """ Computes the valve commands for one tick.

        Args:
            measured: Measured pressures (P1, P2) [kPa].
            setpoints: Raw setpoints (P1_set, P2_set) [kPa].

        Returns:
            The requested commands, before saturation and rate limiting, and
            a dict of recorded signals named like the ControllerOutput fields.
        """
        pass

    @abstractmethod
    def metadata(self) -> dict:
        """ Describes the controller for the run metadata.

        Returns:
            A JSON-serialisable dict of gains and settings.
        """
        pass

    def record_applied(self, applied: ValveCommandSet,
                       saturated: Tuple[bool, bool, bool]) -> None:
        """Hook told which commands were actually applied."""
        pass

    def step(self, measured, setpoints):
        """ One control tick: control law, then saturation and rate limit.

        Args:
            measured: Measured pressures (P1, P2) [kPa].
            setpoints: Raw setpoints (P1_set, P2_set) [kPa].

        Returns:
            A ControllerOutput with the applied commands.
        """

        requested, signals = self.compute(measured, setpoints)

        applied = saturate_and_rate_limit(requested, self.previous, self.dt,
                                          self.rate_max)
        flags = saturation_flags(requested, applied)

        self.previous = applied
        self.record_applied(applied, flags)

        return ControllerOutput(commands=applied, saturated=flags, **signals)
