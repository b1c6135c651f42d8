class IntakeCtrlError(Exception):
    pass


class DomainError(IntakeCtrlError, ValueError):
    """An argument lies outside the range an operation is defined on."""
    pass


class ConfigurationError(IntakeCtrlError, ValueError):
    """A configuration value, gain set or discretisation guard is invalid."""
    pass


class TrimError(ConfigurationError):
    """No steady valve opening balances the flows at the requested state."""
    pass


class IntegrationFault(IntakeCtrlError, RuntimeError):

    def __init__(self, t, state, reason='chamber state became nonphysical'):

        self.t = t
        self.state = state
        self.reason = reason

        super().__init__(f'{reason} at t={t:.4f} s: {state}')


class DivergenceError(IntakeCtrlError, RuntimeError):

    def __init__(self, iteration, value):

        self.iteration = iteration
        self.value = value

        super().__init__(
            f'Augmented objective diverged at iteration {iteration} '
            f'(L={value:.6g}); the learning rate is too large.')
