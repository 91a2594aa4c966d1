import numpy as np
import pytest

from msglmb.gaussian import GaussianDensity, MotionModel, SensorModel
from msglmb.types import MeasurementFrame
from msglmb.weights import BirthComponent, WeightContext


@pytest.fixture
def cv_motion_1d() -> MotionModel:
    return MotionModel.constant_velocity(1.0, 1.0, 0.6, axes=1)


@pytest.fixture
def sensor_1d() -> SensorModel:
    return SensorModel.position_sensor([1.0], 0.5, 0.01, axes=1)


@pytest.fixture
def two_scan_context(cv_motion_1d, sensor_1d) -> WeightContext:
    birth = BirthComponent(0.4, GaussianDensity(np.zeros(2), np.eye(2) * 4.0))
    frames = (MeasurementFrame.from_lists([[[0.5]]], dim=1),
              MeasurementFrame.from_lists([[[1.2], [-3.0]]], dim=1))
    return WeightContext(cv_motion_1d, (sensor_1d,), (birth,), frames)
