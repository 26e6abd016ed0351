import math

import pytest

import nonosgood as ng


@pytest.fixture(scope="module")
def pair():
    return ng.default_pair()


def test_modulus_and_osgood(pair):
    omega = ng.Modulus.catalog(2, 1)
    assert omega(1.0) == pytest.approx(4.0)
    wt = ng.Modulus.catalog(2, 0.5)
    assert wt.osgood_total(math.log(0.25)) == pytest.approx(1.086845, abs=1e-5)
    y = 0.7
    assert wt.osgood_total(wt.inverse_osgood(y)) == pytest.approx(y, rel=1e-12)
    assert pair.weight(math.log(0.25)) == pytest.approx(math.sqrt(2 + math.log(4)), rel=1e-12)
    with pytest.raises(ng.DivergenceError):
        ng.Modulus.catalog(2, 0).osgood_total(-1.0)


def test_auxiliary(pair):
    out = ng.build_auxiliary(ng.Modulus.catalog(2, 1), 12)
    assert out["a"][0] == 1.0
    assert not out["truncated"]
    aux = out["aux"]
    assert aux.non_osgood()


def test_geometry():
    assert ng.cantor_center("++") == pytest.approx([0.25, 0.25])
    assert ng.cantor_center("++|-+") == pytest.approx([3 / 16, 5 / 16])
    assert ng.dyadic_center("++|-+") == pytest.approx([1 / 8, 3 / 8])
    assert ng.locate_symbols([3 / 16, 5 / 16], 2) == "++|-+"
    assert ng.target_map([3 / 16, 5 / 16], 2) == pytest.approx([1 / 8, 3 / 8])


def test_building_block():
    b = ng.BuildingBlock([1.0, 0.0])
    assert b([0.1, -0.2]) == [1.0, 0.0]
    assert b([0.5, 0.5]) == [0.0, 0.0]
    J = b.grad([0.1, 0.0])
    assert J == [[0.0, 0.0], [0.0, 0.0]]


def test_trajectory_field(pair):
    fld = ng.TrajField(pair, d=2, n_max=8)
    assert fld.T == pytest.approx(1.086845, abs=1e-5)
    assert fld(0.0, [0.2, 0.2]) == [0.0, 0.0]
    assert fld(0.05, [1.2, 0.0]) == [0.0, 0.0]
    start = ng.cantor_center("++|-+")
    end = fld.integrate(start, 0.0, fld.grid()[2])
    assert end == pytest.approx(ng.dyadic_center("++|-+"), abs=1e-6)
    back = fld.integrate(ng.dyadic_center("++|-+"), 0.0, fld.T, reversed=True)
    assert back == pytest.approx(start, abs=1e-6)


def test_param_table(pair):
    tbl = ng.ParamTable(pair, d=2, levels=6)
    assert tbl.N(0)[0] == 1.0
    assert tbl.N(0)[1] == 2.0
    assert tbl.N(0)[2] >= 617.0
    assert tbl.certificates_pass()
    assert tbl.saturated()

    mu0 = tbl.mu_density(0.0)
    assert mu0["n_cubes"] == 1
    assert mu0["mass"] == pytest.approx(1.0)
    mu1 = tbl.mu_density(1.0)
    assert mu1["n_cubes"] == 4
    assert mu1["mass"] == pytest.approx(1.0)
    assert mu1["l1_to_uniform"] == pytest.approx(2.0, abs=1e-10)

    bs = tbl.block_start(0)
    tmid = 0.5 * (bs[0] + tbl.tau(0)[0] + bs[1])
    snap = tbl.density(0, tmid, depth=4)
    assert len(snap["cubes"]) == 16
    assert snap["mass"] == pytest.approx(1.0)
    with pytest.raises(ng.ResolutionError):
        tbl.density(0, 0.5 * (bs[1] + tbl.tau(0)[1] + bs[2]), depth=4)
