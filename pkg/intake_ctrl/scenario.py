from dataclasses import dataclass, field
from typing import NamedTuple, Tuple

import numpy as np

from intake_ctrl.exceptions import ConfigurationError, DomainError

NOISE_MODELS = ('truncated-gaussian', 'uniform')


class PiecewiseLinearProfile(NamedTuple):
    """ Signal given by (t, value) breakpoints, linear in between and held
    constant outside.
    """

    times: Tuple[float, ...]
    values: Tuple[float, ...]

    @classmethod
    def from_breakpoints(cls, breakpoints):

        breakpoints = list(breakpoints)

        if len(breakpoints) == 0:
            raise ConfigurationError('A profile needs at least one breakpoint')

        times, values = zip(*breakpoints)

        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigurationError(
                f'Breakpoint times must be strictly increasing, got {times}')

        return cls(tuple(float(t) for t in times),
                   tuple(float(v) for v in values))

    @classmethod
    def constant(cls, value):
        return cls((0.0,), (float(value),))

    @property
    def breakpoints(self):
        return list(zip(self.times, self.values))


def profile_eval(profile, t):

    if len(profile.times) == 0:
        raise ConfigurationError('Cannot evaluate an empty profile')

    return float(np.interp(t, profile.times, profile.values))


@dataclass(frozen=True)
class NoiseConfig:
    """ Measurement noise bounds; pressures in kPa, temperatures in K. """

    temp_bound: float = 0.1
    press_bound: float = 2.0
    seed: int = 2
    model: str = 'truncated-gaussian'

    def __post_init__(self):

        if self.temp_bound < 0 or self.press_bound < 0:
            raise ConfigurationError('Noise bounds must be >= 0')

        if self.model not in NOISE_MODELS:
            raise ConfigurationError(f'Noise model must be one of '
                                     f'{NOISE_MODELS}, got {self.model!r}')

    def make_rng(self):
        return np.random.Generator(np.random.PCG64(self.seed))


def apply_noise(true_value, bound, rng, model='truncated-gaussian'):
    """ Adds bounded noise to a measurement.

    The truncated Gaussian has standard deviation bound / 3 and is clipped to
    [-bound, bound].

    Args:
        true_value: Noise-free value or array of values.
        bound: Largest absolute noise.
        rng: numpy random Generator.
        model: 'truncated-gaussian' or 'uniform'.

    Returns:
        The measured value(s).
    """

    if bound < 0:
        raise DomainError(f'Noise bound must be >= 0, got {bound}')

    if bound == 0:
        return true_value

    shape = np.shape(true_value)

    if model == 'uniform':
        noise = rng.uniform(-bound, bound, size=shape)
    else:
        noise = np.clip(rng.normal(0.0, bound / 3, size=shape), -bound, bound)

    if shape == ():
        return true_value + float(noise)

    return true_value + noise


@dataclass(frozen=True)
class Scenario:
    """ Setpoints [kPa] and engine extraction flow [kg/s] over time. """

    name: str
    p1_set: PiecewiseLinearProfile
    p2_set: PiecewiseLinearProfile
    mdot_out: PiecewiseLinearProfile
    duration: float = 300.0
    dt: float = 0.01
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    eps1: float = 5.0
    eps2: float = 3.0

    def __post_init__(self):

        if self.duration <= 0 or self.dt <= 0:
            raise ConfigurationError(
                f'Need duration > 0 and dt > 0, got {self.duration}, '
                f'{self.dt}')

        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ConfigurationError('Constraint bounds must be positive')

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))

    def setpoints(self, t):
        return profile_eval(self.p1_set, t), profile_eval(self.p2_set, t)

    def mdot_out_at(self, t):
        return profile_eval(self.mdot_out, t)


# Upstream chamber setpoint; three ramps after the flow settles.
RAMP_SETPOINT = [(0, 65), (125, 65), (150, 70), (155, 70), (165, 75),
                 (220, 75), (250, 65), (300, 65)]

HELD_SETPOINT = [(0, 130), (300, 130)]

# Steady decrease, mid-range drift, then a rise and fall in the last phase.
ENGINE_FLOW = [(0, 780), (60, 370), (100, 370), (250, 280), (265, 280),
               (270, 550), (280, 550), (285, 280), (300, 280)]

STEEP_ENGINE_FLOW = [(0, 780), (60, 370), (100, 370), (250, 280),
                     (265, 280), (266.5, 550), (280, 550), (281.5, 280),
                     (300, 280)]


def _scenario(name, p1, p2, steep):

    flow = STEEP_ENGINE_FLOW if steep else ENGINE_FLOW

    return Scenario(name=name,
                    p1_set=PiecewiseLinearProfile.from_breakpoints(p1),
                    p2_set=PiecewiseLinearProfile.from_breakpoints(p2),
                    mdot_out=PiecewiseLinearProfile.from_breakpoints(flow))


def published_scenario(steep=False):
    """ The three-phase test as published: V1 follows the ramp setpoint and
    V2 is held at 130 kPa. V1 then sits below V2, which the one-directional
    valves cannot sustain, so the plant cannot be trimmed for it.
    """

    name = 'published-steep' if steep else 'published'

    return _scenario(name, RAMP_SETPOINT, HELD_SETPOINT, steep)


def physical_scenario(steep=False):
    """The three-phase test with the held setpoint upstream and the ramp on
    the engine chamber."""

    name = 'physical-steep' if steep else 'physical'

    return _scenario(name, HELD_SETPOINT, RAMP_SETPOINT, steep)


PRESETS = {
    'published': lambda: published_scenario(steep=False),
    'published-steep': lambda: published_scenario(steep=True),
    'paper': lambda: published_scenario(steep=False),
    'paper-steep': lambda: published_scenario(steep=True),
    'physical': lambda: physical_scenario(steep=False),
    'physical-steep': lambda: physical_scenario(steep=True),
}


def get_preset(name):

    if name not in PRESETS:
        raise ConfigurationError(f'Unknown scenario preset {name!r}; choose '
                                 f'from {sorted(PRESETS)}')

    return PRESETS[name]()
