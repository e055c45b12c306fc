import math

import numpy as np
import pytest

from auralize import geometry


def octave_material(mid, absorption, scattering=0.0):
    if np.isscalar(absorption):
        absorption = [absorption] * 8
    if np.isscalar(scattering):
        scattering = [scattering] * 8
    return geometry.Material(
        id=mid,
        absorption=geometry.BandSpectrum.octave(absorption),
        scattering=geometry.BandSpectrum.octave(scattering),
    )


def make_shoebox(dims=(5.0, 4.0, 3.0), absorption=0.2, scattering=0.0,
                 sources=None, receivers=None):
    return geometry.shoebox(
        dims,
        octave_material("walls", absorption, scattering),
        sources=sources or {"s": (1.0, 1.0, 1.5)},
        receivers=receivers or {"r": (3.5, 2.5, 1.5)},
    )


@pytest.fixture
def shoebox_room():
    return make_shoebox()


def living_room_model():
    """A 5.5 x 4.5 x 2.7 m (66.8 m^3) room with a moderate absorption tilt."""
    mat = octave_material(
        "walls",
        [0.10, 0.12, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40],
        [0.1] * 8,
    )
    return geometry.shoebox(
        (5.5, 4.5, 2.7), mat,
        sources={"s1": (1.0, 1.2, 1.4)},
        receivers={
            "near": (1.8, 1.9, 1.4),    # ~1.1 m from the source
            "far": (4.6, 3.6, 1.4),     # ~4.3 m from the source
        },
    )


# one PASS/FAIL line per acceptance criterion, printed after the test run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def assert_close(a, b, tol, msg=""):
    assert abs(a - b) <= tol, f"{msg}: {a} vs {b} (tol {tol})"


def rel_err(a, b):
    return abs(a - b) / abs(b)
