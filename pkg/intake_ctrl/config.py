""" Run configuration read from INI files.

Every section maps onto a frozen dataclass whose field names are the keys;
units are part of the key names. Every key has a default, so an empty file
is a valid configuration. Unknown sections and keys are rejected.
"""
import configparser
import os
import typing
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from intake_ctrl.exceptions import ConfigurationError
from intake_ctrl.plant.gas import BoundaryConditions, GasConstants
from intake_ctrl.plant.plant import PlantParams
from intake_ctrl.scenario import (NOISE_MODELS, NoiseConfig,
                                  PiecewiseLinearProfile, get_preset)

CONTROLLERS = ('adrc', 'pid')


@dataclass(frozen=True)
class PlantConfig:

    v1_volume_m3: float = 300.0
    v2_volume_m3: float = 800.0
    gas_constant_j_kgk: float = 287.06
    cp_j_kgk: float = 1004.5
    valve_air_diameter_m: float = 2.6
    valve1_diameter_m: float = 2.6
    valve2_diameter_m: float = 1.2
    valve_air_tau_s: float = 2.5
    valve1_tau_s: float = 2.5
    valve2_tau_s: float = 1.5
    valve_delay_s: float = 0.15
    supply_area_m2: float = 3.0
    phi_choked: float = 0.65
    p_in_kpa: float = 150.0
    t_in_k: float = 253.0
    p_amb_kpa: float = 101.325
    t_amb_k: float = 288.0
    p_engine_kpa: float = 50.0
    q1_w: float = 0.0
    q2_w: float = 0.0

    def __post_init__(self):

        if self.p_in_kpa <= 0 or self.p_amb_kpa <= 0 or self.t_in_k <= 0:
            raise ConfigurationError('Boundary pressures and temperatures '
                                     'must be positive')

        # Validates the remaining physical fields.
        self.plant_params()

    def plant_params(self):

        return PlantParams(
            v1_volume=self.v1_volume_m3,
            v2_volume=self.v2_volume_m3,
            gas=GasConstants(R=self.gas_constant_j_kgk, cp=self.cp_j_kgk),
            diameters=(self.valve_air_diameter_m, self.valve1_diameter_m,
                       self.valve2_diameter_m),
            taus=(self.valve_air_tau_s, self.valve1_tau_s, self.valve2_tau_s),
            delay=self.valve_delay_s,
            supply_area=self.supply_area_m2,
            phi_choked=self.phi_choked)

    def boundary_conditions(self, mdot_out=0.0):

        return BoundaryConditions(
            P_in=self.p_in_kpa * 1e3, T_in=self.t_in_k,
            P_amb=self.p_amb_kpa * 1e3, T_amb=self.t_amb_k,
            P_engine=self.p_engine_kpa * 1e3, Q1=self.q1_w, Q2=self.q2_w,
            mdot_out=mdot_out)


@dataclass(frozen=True)
class AdrcConfig:
    """ADRC gains; b_eff1, b_eff2 and c12 are derived from the plant at the
    initial operating point unless given."""

    k11: float = 0.25
    k12: float = 1.0
    k13: float = 0.05
    k21: float = 2.0
    k22: float = 2.0
    k23: float = 0.1
    omega1_rad_s: float = 2.0
    omega2_rad_s: float = 5.0
    meas_filter_tau_s: float = 0.1
    b_eff1: Optional[float] = None
    b_eff2: Optional[float] = None
    c12: Optional[float] = None
    rho: float = 0.5
    pd_sign_convention: str = 'conventional'
    decouple: bool = True
    td_r: float = 10.0
    td_h_factor: float = 2.0
    n_grow: int = 50
    m_reset: int = 200

    def __post_init__(self):

        if self.omega1_rad_s <= 0 or self.omega2_rad_s <= 0:
            raise ConfigurationError('Observer bandwidths must be positive')

        if self.meas_filter_tau_s < 0:
            raise ConfigurationError('meas_filter_tau_s must be >= 0')

        if self.n_grow < 1 or self.m_reset < 1:
            raise ConfigurationError('n_grow and m_reset must be >= 1')


PID_LOOPS = ('air', 'valve1', 'valve2')


@dataclass(frozen=True)
class PidConfig:
    """PID gains per valve; without gains the baseline is tuned from the
    plant."""

    air_kp: Optional[float] = None
    air_ki: Optional[float] = None
    air_kd: Optional[float] = None
    valve1_kp: Optional[float] = None
    valve1_ki: Optional[float] = None
    valve1_kd: Optional[float] = None
    valve2_kp: Optional[float] = None
    valve2_ki: Optional[float] = None
    valve2_kd: Optional[float] = None
    integral_limit_kpa_s: Optional[float] = None
    detune: float = 0.5
    derivative_filter_n: float = 10.0

    def __post_init__(self):

        given = [getattr(self, f'{loop}_{k}') is not None
                 for loop in PID_LOOPS for k in ('kp', 'ki', 'kd')]

        if any(given) and not all(given):
            raise ConfigurationError('Give either all nine PID gains or none')

        if not 0 < self.detune <= 1:
            raise ConfigurationError(f'detune must lie in (0, 1], got '
                                     f'{self.detune}')

        if self.derivative_filter_n < 0:
            raise ConfigurationError(f'derivative_filter_n must be >= 0, got '
                                     f'{self.derivative_filter_n}')

    @property
    def tuned(self):
        return self.air_kp is None

    def loop_gains(self, loop):
        return tuple(getattr(self, f'{loop}_{k}') for k in ('kp', 'ki', 'kd'))


@dataclass(frozen=True)
class PenaltyConfig:

    gamma: float = 0.5
    mu: float = 0.001
    sigma: float = 0.01
    lr: float = 0.2
    omega: float = 2.0
    xi: float = 1e-6
    gamma_max_online: float = 1e4
    gamma_max_offline: float = 1e8
    max_iters: int = 10000
    tol: float = 1e-10
    adaptive_lr: bool = True
    start_p1_kpa: Optional[float] = None
    start_p2_kpa: Optional[float] = None
    p1_set_kpa: Optional[float] = None
    p2_set_kpa: Optional[float] = None
    c1_kpa: Optional[float] = None
    c2_kpa: Optional[float] = None


@dataclass(frozen=True)
class ScenarioConfig:
    """A preset, optionally with inline `t:value` profiles replacing its
    own."""

    preset: str = 'physical'
    p1_set_kpa: Optional[str] = None
    p2_set_kpa: Optional[str] = None
    mdot_out_kg_s: Optional[str] = None
    duration_s: Optional[float] = None
    eps1_kpa: Optional[float] = None
    eps2_kpa: Optional[float] = None
    temp_noise_k: float = 0.1
    press_noise_kpa: float = 2.0
    noise_model: str = 'truncated-gaussian'

    def __post_init__(self):

        if self.noise_model not in NOISE_MODELS:
            raise ConfigurationError(f'noise_model must be one of '
                                     f'{NOISE_MODELS}')

        for name in ('p1_set_kpa', 'p2_set_kpa', 'mdot_out_kg_s'):
            value = getattr(self, name)
            if value is not None:
                parse_profile(value, name)


@dataclass(frozen=True)
class RunConfig:

    controller: str = 'adrc'
    dt_s: float = 0.01
    seed: int = 2
    output_dir: str = 'results'
    valve_rate_max_per_s: float = 0.4
    metric_window_start_s: float = 250.0
    metric_window_end_s: float = 300.0

    def __post_init__(self):

        if self.controller not in CONTROLLERS:
            raise ConfigurationError(f'controller must be one of '
                                     f'{CONTROLLERS}, got {self.controller!r}')

        if self.dt_s <= 0:
            raise ConfigurationError(f'dt_s must be positive, got {self.dt_s}')

        if self.valve_rate_max_per_s <= 0:
            raise ConfigurationError('valve_rate_max_per_s must be positive')

        if self.metric_window_end_s <= self.metric_window_start_s:
            raise ConfigurationError('Metric window must have positive '
                                     'length')


@dataclass(frozen=True)
class SimConfig:

    plant: PlantConfig = field(default_factory=PlantConfig)
    adrc: AdrcConfig = field(default_factory=AdrcConfig)
    pid: PidConfig = field(default_factory=PidConfig)
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def build_scenario(self):
        """The scenario preset with the inline overrides, run step and
        seed applied."""

        sc = self.scenario
        base = get_preset(sc.preset)

        overrides = {'dt': self.run.dt_s,
                     'noise': NoiseConfig(temp_bound=sc.temp_noise_k,
                                          press_bound=sc.press_noise_kpa,
                                          seed=self.run.seed,
                                          model=sc.noise_model)}

        profiles = {'p1_set': sc.p1_set_kpa, 'p2_set': sc.p2_set_kpa,
                    'mdot_out': sc.mdot_out_kg_s}

        for name, text in profiles.items():
            if text is not None:
                overrides[name] = parse_profile(text, name)

        if sc.duration_s is not None:
            overrides['duration'] = sc.duration_s
        if sc.eps1_kpa is not None:
            overrides['eps1'] = sc.eps1_kpa
        if sc.eps2_kpa is not None:
            overrides['eps2'] = sc.eps2_kpa

        return replace(base, **overrides)

    def with_overrides(self, **run_overrides):
        """Copy with [run] keys replaced; None values are ignored."""

        scenario = run_overrides.pop('scenario', None)
        changes = {k: v for k, v in run_overrides.items() if v is not None}

        cfg = replace(self, run=replace(self.run, **changes))

        if scenario is not None:
            cfg = replace(cfg, scenario=replace(cfg.scenario, preset=scenario))

        return cfg


SECTIONS = {
    'plant': PlantConfig,
    'adrc': AdrcConfig,
    'pid': PidConfig,
    'penalty': PenaltyConfig,
    'scenario': ScenarioConfig,
    'run': RunConfig,
}


def parse_profile(text, name='profile'):
    """ Parses `t:value, t:value, ...` into a PiecewiseLinearProfile. """

    try:
        pairs = [item.split(':') for item in text.replace('\n', ',')
                 .split(',') if item.strip()]
        breakpoints = [(float(t), float(v)) for t, v in pairs]
    except ValueError as e:
        raise ConfigurationError(f'Cannot parse {name} profile {text!r}; '
                                 f'expected "t:value, t:value, ..."') from e

    return PiecewiseLinearProfile.from_breakpoints(breakpoints)


def _field_type(f):

    hint = f.type

    # Optional[X] is Union[X, None]
    if typing.get_origin(hint) is typing.Union:
        hint = [a for a in typing.get_args(hint) if a is not type(None)][0]

    return hint


def _convert(section, key, f):

    raw = section[key].strip()
    optional = f.default is None

    if optional and raw == '':
        return None

    kind = _field_type(f)

    try:
        if kind is bool:
            return section.getboolean(key)
        if kind is int:
            return section.getint(key)
        if kind is float:
            return section.getfloat(key)
    except ValueError as e:
        raise ConfigurationError(
            f'[{section.name}] {key} = {raw!r} is not a valid '
            f'{kind.__name__}') from e

    return raw


def _parse_section(cls, section):

    known = {f.name: f for f in fields(cls)}
    values = {}

    for key in section:
        if key not in known:
            raise ConfigurationError(
                f'Unknown key {key!r} in section [{section.name}]')
        values[key] = _convert(section, key, known[key])

    return cls(**values)


def parse_config(text):

    parser = configparser.ConfigParser(interpolation=None)

    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigurationError(f'Malformed configuration: {e}') from e

    unknown = set(parser.sections()) - set(SECTIONS)

    if unknown:
        raise ConfigurationError(f'Unknown section(s) {sorted(unknown)}; '
                                 f'expected {sorted(SECTIONS)}')

    parsed = {name: _parse_section(cls, parser[name])
              for name, cls in SECTIONS.items() if parser.has_section(name)}

    return SimConfig(**parsed)


def load_config(path):

    if not os.path.isfile(path):
        raise ConfigurationError(f'Configuration file {path} not found')

    with open(path) as f:
        return parse_config(f.read())
