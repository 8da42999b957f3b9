"""End-to-end design of a potential that moves a restricted return map."""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .control import ControlData, synthesize_control, transition_ode_solve
from .flow import DEFAULT_CONFIG
from .normalform import build_normal_form
from .orbits import make_section_frame, restricted_return_map
from .potentials import default_radius, disjoint_support_check, potential_for_control, transport_potential


@dataclass
class SegmentSetup:
    """Normal form at an orbit time with the matching section frame and unperturbed return map."""

    orbit: object
    anchor_time: float
    nf: object
    control: ControlData
    frame: object
    L0: np.ndarray
    segment0: np.ndarray


def prepare_segment(H, orbit, anchor_time=0.0, delta_request=0.5, cfg=DEFAULT_CONFIG):
    x = orbit.state(anchor_time)
    nf = build_normal_form(H, x, delta_request, cfg)
    frame = make_section_frame(H, nf.orbit_point(0.0), normal=nf.section_normal(0.0), basis=nf.frame(0.0),
                               anchor_time=anchor_time)
    L0 = np.asarray(restricted_return_map(H, orbit, frame, cfg=cfg))
    cd = ControlData.from_normal_form(nf)
    return SegmentSetup(orbit, float(anchor_time), nf, cd, frame, L0, np.asarray(transition_ode_solve(cd)))


@dataclass
class PerturbationDesign:
    target: np.ndarray
    achieved: np.ndarray
    L0: np.ndarray
    relative_residual: float
    control_residual: float
    potential: object = field(repr=False)
    radius: float = 0.0
    disjoint: bool = True
    warning: str = ""


def design_perturbation(setup, N, eps, radius=None, cfg=DEFAULT_CONFIG, **synth_kw):
    """Potential moving the return map from ``L0`` towards ``L0 exp(eps N)``.

    The segment transition is steered to ``L(delta) exp(eps N)``; since the
    potential lives on the segment only, the return map follows.
    """
    N = np.asarray(N, dtype=float)
    target = setup.L0 @ expm(eps * N)
    seg_target = setup.segment0 @ expm(eps * N)
    res = synthesize_control(setup.control, seg_target, **synth_kw)
    delta = setup.nf.delta
    window = (setup.anchor_time, setup.anchor_time + delta)
    if radius is None:
        radius = default_radius(setup.orbit, window, setup.nf.chart)
    u_chart = potential_for_control(res.B, radius)
    H = setup.nf.H
    u = transport_potential(u_chart, setup.nf.chart, H)
    disjoint = disjoint_support_check(u, setup.orbit, window)
    L = np.asarray(restricted_return_map(H, setup.orbit, setup.frame, u=u, cfg=cfg))
    rel = float(np.linalg.norm(L - target) / np.linalg.norm(target - setup.L0))
    return PerturbationDesign(target, L, setup.L0, rel, res.residual, u, float(radius), disjoint, res.warning)
