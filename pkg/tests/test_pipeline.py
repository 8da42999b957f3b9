import numpy as np
import pytest

from hamperturb.models import zoo
from hamperturb.orbits import orbit_from_data
from hamperturb.pipeline import prepare_segment


def test_segment_of_the_detuned_oscillator():
    z = zoo()["harmonic_detuned"]
    orbit = orbit_from_data(z.H, z.x0, z.period)
    setup = prepare_segment(z.H, orbit, anchor_time=1.0, delta_request=0.5)
    w, delta = 1.3, setup.nf.delta
    assert np.trace(setup.L0) == pytest.approx(2 * np.cos(2 * np.pi * w), abs=1e-8)
    # constant K = w^2 with D = 1: the segment transition is a rotation by w delta
    c, s = np.cos(w * delta), np.sin(w * delta)
    assert np.allclose(setup.segment0, [[c, s / w], [-w * s, c]], atol=1e-8)
    assert np.allclose(setup.frame.point, orbit.state(1.0), atol=1e-9)
