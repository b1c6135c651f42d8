from intake_ctrl.controllers.adrc import AdrcController, AdrcGains
from intake_ctrl.controllers.allocation import ValveCommandSet
from intake_ctrl.controllers.base import ControllerOutput, PressureController
from intake_ctrl.controllers.pid import PidController, PidGains
