import math

import pytest

from spinner.fov import SensorMount, revisit_period, swept_horizontal_fov, swept_vertical_fov


def test_vertical_sweep():
    assert swept_vertical_fov(SensorMount(59.0, 15.0)) == 89.0
    assert swept_vertical_fov(SensorMount(59.0, 0.0)) == 59.0
    assert swept_vertical_fov(SensorMount(59.0, 40.0)) == 139.0


@pytest.mark.parametrize("tilt", [0.0, 1.0, 15.0, 45.0, 89.0])
def test_sweep_never_shrinks(tilt):
    m = SensorMount(59.0, tilt)
    assert swept_vertical_fov(m) >= m.native_vertical_fov
    assert (swept_vertical_fov(m) == m.native_vertical_fov) == (tilt == 0.0)


def test_horizontal_sweep():
    m = SensorMount()
    assert swept_horizontal_fov(m, 9.3) == 360.0
    assert swept_horizontal_fov(m, 0.0) == m.native_horizontal_fov


def test_revisit_period():
    assert revisit_period(9.3) == pytest.approx(2 * math.pi / 9.3)
    assert revisit_period(9.3) == pytest.approx(0.676, abs=1e-3)
    assert revisit_period(0.0) == math.inf


@pytest.mark.parametrize("kw", [dict(native_vertical_fov=0.0), dict(native_vertical_fov=180.0),
                                dict(tilt_angle=-1.0), dict(tilt_angle=90.0), dict(native_horizontal_fov=200.0)])
def test_mount_validation(kw):
    with pytest.raises(ValueError):
        SensorMount(**kw)
