import math

import numpy as np
import pytest

from app.commands.common import build_disc, build_region, parse_region
from app.services.errors import GeometryError, ParameterError
from app.services.regions import DiscRegion, PolygonRegion, rectangle_region, region_from_description


def test_description_rebuilds_the_region():
    for region in (DiscRegion(0.5 - 0.25j, 2.0), rectangle_region(-2, 2, -1, 1)):
        again = region_from_description(region.describe())
        assert again.describe() == region.describe()
        z = np.array([0.1 + 0.2j, 1.9 + 0.9j, 3.0])
        np.testing.assert_array_equal(again.contains(z), region.contains(z))
    with pytest.raises(GeometryError):
        region_from_description({"type": "ellipse"})


def test_rectangle_distances():
    rect = rectangle_region(-2, 2, -1, 1)
    assert rect.boundary_length == pytest.approx(12.0)
    np.testing.assert_allclose(rect.boundary_distance(np.array([0j, 1.5 + 0.5j])), [1.0, 0.5])
    assert not rect.contains(2 + 0j)
    with pytest.raises(GeometryError):
        rectangle_region(1, 0, 0, 1)
    with pytest.raises(GeometryError):
        PolygonRegion(np.array([0, 1]))


def test_command_builders():
    region = build_region(parse_region("rect:-2,2,-1,1"))
    assert isinstance(region, PolygonRegion)
    assert region.boundary_length == pytest.approx(12.0)
    disc = build_disc(parse_region("disc:1,0,1.5"), DiscRegion(0j, 1.0))
    assert disc.center == 1 and disc.radius == 1.5
    assert disc.boundary_length == pytest.approx(3 * math.pi)
    assert build_region(None) is None
    assert build_disc(None, DiscRegion(0j, 1.0)).radius == 1.0
    with pytest.raises(ParameterError):
        build_disc(parse_region("rect:-2,2,-1,1"), DiscRegion(0j, 1.0))
