"""Geometric controller wired to a flat trajectory, plus convenience runners."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from quadgeo.control import ControlGains, DegenerateReference, StateReference, control_step
from quadgeo.model import VehicleParams, allocate
from quadgeo.sim import ControlOutput, RigidBodyState, SimConfig, SimLog, run
from quadgeo.so3 import euler_to_rotation
from quadgeo.trajectory import FlatTrajectory, expand


class GeometricController:
    """Callable controller for :func:`quadgeo.sim.run`.

    Keeps the previous desired rotation so a degenerate tick can reuse it.
    """

    def __init__(
        self,
        flat: FlatTrajectory,
        params: VehicleParams,
        gains: ControlGains,
        feedback_expansion: bool = True,
    ):
        self.flat = flat
        self.params = params
        self.gains = gains
        self.feedback_expansion = feedback_expansion
        self._prev: StateReference | None = None

    def reference(self, t: float, state: RigidBodyState | None = None) -> StateReference:
        return expand(
            self.flat, t, self.params, self.gains,
            state if self.feedback_expansion else None,
        )

    def __call__(self, t: float, state: RigidBodyState) -> ControlOutput:
        degenerate = False
        try:
            ref = self.reference(t, state)
        except DegenerateReference:
            if self._prev is None:
                raise
            degenerate = True
            s = self.flat(t)
            p = self._prev
            ref = StateReference(s.r, s.v, s.a, s.psi, s.psi_dot, p.R_d, p.omega_d, np.zeros(3))
        fallback = None if self._prev is None else self._prev.R_d
        res = control_step(state, ref, self.params, self.gains, fallback_R_d=fallback)
        self._prev = StateReference(
            ref.r_d, ref.v_d, ref.a_d, ref.psi_d, ref.psi_d_dot, res.R_d, ref.omega_d, ref.omega_d_dot
        )
        alloc = allocate(res.wrench, self.params)
        return ControlOutput(
            pwm=alloc.pwm,
            wrench_cmd=res.wrench,
            r_d=ref.r_d,
            v_d=ref.v_d,
            psi_d=ref.psi_d,
            e_r=res.e_r,
            e_v=res.e_v,
            e_R=res.e_R,
            e_omega=res.e_omega,
            saturated=alloc.saturated,
            degenerate=degenerate or res.degenerate,
        )


def state_on_reference(
    flat: FlatTrajectory,
    params: VehicleParams,
    offset=(0.0, 0.0, 0.0),
    euler_offset=(0.0, 0.0, 0.0),
    gains: ControlGains | None = None,
) -> RigidBodyState:
    """Initial state matching the reference at t = 0, optionally perturbed.

    ``euler_offset`` (roll, pitch, yaw in radians) is applied on the body side
    of the desired attitude. With ``gains`` the desired attitude includes the
    feedback from the position offset, so the offset is the actual initial
    attitude error seen by the controller.
    """
    ref = expand(flat, 0.0, params)
    r0 = ref.r_d + np.asarray(offset, dtype=float)
    R_d = ref.R_d
    if gains is not None:
        probe = RigidBodyState(r0, ref.v_d.copy(), ref.R_d, ref.omega_d.copy())
        R_d = expand(flat, 0.0, params, gains, probe).R_d
    R = R_d @ euler_to_rotation(*euler_offset)
    return RigidBodyState(r0, ref.v_d.copy(), R, ref.omega_d.copy())


def simulate(
    flat: FlatTrajectory,
    params: VehicleParams,
    gains: ControlGains,
    config: SimConfig,
    plant_params: VehicleParams | None = None,
) -> SimLog:
    if config.initial_state is None:
        config = replace(config, initial_state=state_on_reference(flat, params))
    return run(config, GeometricController(flat, params, gains), params, plant_params)
