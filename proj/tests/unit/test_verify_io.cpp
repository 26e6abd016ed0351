#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "nonosgood/bblock.hpp"
#include "nonosgood/io.hpp"
#include "nonosgood/verify.hpp"

using namespace nonosgood;

TEST_CASE("divergence residual on reference fields") {
    Vec lo(2), hi(2);
    lo[0] = lo[1] = -0.4;
    hi[0] = hi[1] = 0.4;
    auto constant = [](double, const Vec& x) {
        Vec v(x.d);
        v[0] = 1.0;
        v[1] = -2.0;
        return v;
    };
    auto rep = verify::divergence_residual(constant, 2, 0.0, 200, 1e-5, lo, hi, 1e-12, 1,
                                           "const", "test");
    CHECK(rep.statistic == 0.0);
    CHECK(rep.degenerate);
    CHECK(rep.pass);

    bblock::BuildingBlock blk([] {
        Vec e(2);
        e[0] = 1.0;
        e[1] = 0.3;
        return e;
    }());
    auto f = [&](double, const Vec& x) { return blk.eval(x); };
    auto rep2 = verify::divergence_residual(f, 2, 0.0, 1000, 1e-5, lo, hi, 1e-6, 2, "block",
                                            "test");
    CHECK(rep2.pass);
}

TEST_CASE("seminorm sampling and the interpolation bound") {
    auto zero = [](double, const Vec& x) { return Vec(x.d); };
    Vec lo(2), hi(2);
    lo[0] = lo[1] = -0.5;
    hi[0] = hi[1] = 0.5;
    auto omega = moc::Modulus::catalog(2, 1);
    CHECK(verify::seminorm_sample(zero, 2, 0.0, omega, 500, lo, hi, 3) == 0.0);

    // a block scaled to carry uniform norm w(r)/2 with plateau width r
    double r = 0.25;
    double amp = 0.5 * omega.eval_log(std::log(r));
    bblock::BuildingBlock blk([&] {
        Vec e(2);
        e[0] = amp;
        return e;
    }());
    auto f = [&](double, const Vec& x) {
        Vec arg = x;
        arg[0] /= 2 * r;
        arg[1] /= 2 * r;
        return blk.eval(arg);
    };
    double est = verify::seminorm_sample(f, 2, 0.0, omega, 4000, lo, hi, 4, 1, 12);
    double lip = amp * bblock::BuildingBlock::c1_constant(2) / (2 * r);
    double bound = verify::interpolation_bound(amp, lip, r, omega);
    CHECK(est > 0.0);
    CHECK(est <= bound);
}

TEST_CASE("pushforward with the identity flow") {
    fixp::DensitySnapshot snap;
    snap.d = 2;
    for (int i = 0; i < 4; ++i) {
        fixp::CubeEntry c;
        c.center = Vec(2);
        c.center[0] = i % 2 ? 0.25 : -0.25;
        c.center[1] = i / 2 ? 0.25 : -0.25;
        c.log_side = std::log(0.25);
        c.log_mass = std::log(0.25);
        snap.cubes.push_back(c);
    }
    auto zero = [](double, const Vec& x) { return Vec(x.d); };
    auto res = verify::pushforward_compare(zero, 2, snap, 0.0, 1.0, snap, 2000, 1e-9, 5, 0.05,
                                           {}, "identity");
    CHECK(res.report.pass);
    CHECK(res.escapes == 0);
    for (size_t c = 0; c < 4; ++c) CHECK(res.counts[c] == 500);
}

TEST_CASE("config parsing and overrides") {
    io::RunConfig cfg;
    io::apply_override(cfg, "depth", "6");
    io::apply_override(cfg, "times", "0, 0.25 ,1");
    io::apply_override(cfg, "modulus", "catalog(a=2, eps=1)");
    CHECK(cfg.depth == 6);
    REQUIRE(cfg.times.size() == 3);
    CHECK(cfg.times[1] == 0.25);
    CHECK_THROWS_AS(io::apply_override(cfg, "bogus_key", "1"), construction_error);
    io::RunConfig bad;
    bad.d = 1;
    CHECK_THROWS_AS(bad.validate(), construction_error);
    bad = io::RunConfig{};
    bad.frame_res = 0;
    CHECK_THROWS_AS(bad.validate(), construction_error);
    cfg.validate();

    auto m = io::parse_modulus("catalog(a=2, eps=0.5)");
    CHECK(m.catalog_eps() == 0.5);
    auto pair = io::make_pair(cfg);
    CHECK(pair.weight(std::log(0.25)) > 1.0);

    std::string path = "test_cfg_tmp.txt";
    {
        std::ofstream out(path);
        out << "# comment\nmodulus = catalog(a=2, eps=1)\nnmax = 6\nseed = 99\n";
    }
    auto loaded = io::load_config(path);
    CHECK(loaded.n_max == 6);
    CHECK(loaded.seed == 99);
    std::remove(path.c_str());
}

TEST_CASE("modulus tables load from csv") {
    std::string path = "test_table_tmp.csv";
    {
        std::ofstream out(path);
        auto m = moc::Modulus::catalog(2, 1);
        out.precision(17);
        for (int i = 0; i <= 220; ++i) {
            double lam = -0.1 * i;
            out << lam << "," << m.eval_log(lam) << "\n";
        }
    }
    auto t = io::load_modulus_csv(path);
    auto ref = moc::Modulus::catalog(2, 1);
    for (double lam : {-0.7, -3.3, -11.1, -19.9})
        CHECK(t.log_eval(lam) == doctest::Approx(ref.log_eval(lam)).epsilon(1e-2));
    std::remove(path.c_str());

    {
        std::ofstream out(path);
        out << "0,1\n-1,0.2\n-2,0.12\n";  // convex kink: slope rises toward r=1
    }
    CHECK_THROWS_AS(io::load_modulus_csv(path), construction_error);
    std::remove(path.c_str());
}

TEST_CASE("pgm and raster output") {
    std::string path = "test_pgm_tmp.pgm";
    io::write_pgm(path, 2, 2, {0, 64, 128, 255});
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == std::string("P5\n2 2\n255\n") + '\0' + '\x40' + '\x80' + '\xff');
    std::remove(path.c_str());

    fixp::DensitySnapshot full;
    full.d = 2;
    full.cubes.push_back({Vec(2), 0.0, 0.0});  // unit cube, unit mass
    auto r = io::raster_density(full, 16);
    CHECK_FALSE(r.skipped);
    for (uint8_t px : r.pixels) CHECK(px == 255);

    fixp::DensitySnapshot tiny;
    tiny.d = 2;
    tiny.cubes.push_back({Vec(2), -800.0, 800.0 * 2});  // sub-pixel side
    auto r2 = io::raster_density(tiny, 16);
    CHECK(r2.skipped);
}

TEST_CASE("trajectory csv and snapshot json") {
    traj::Trajectory tr;
    tr.times = {0.0, 0.5};
    Vec a(2), b(2);
    b[0] = 1.0;
    tr.points = {a, b};
    tr.end = b;
    auto csv = io::trajectory_csv(tr, 2);
    CHECK(csv == "t,x_1,x_2\n0,0,0\n0.5,1,0\n");

    fixp::DensitySnapshot snap;
    snap.d = 2;
    snap.k = 0;
    snap.t = 0.25;
    snap.cubes.push_back({Vec(2), -1.0, -0.5});
    auto j = io::snapshot_json(snap);
    CHECK(j["cubes"].size() == 1);
    CHECK(j["mass"].get<double>() == doctest::Approx(std::exp(-0.5)));
    CHECK(j["cubes"][0]["log_side"].get<double>() == -1.0);
}

TEST_CASE("sampled checks are invariant under the thread budget") {
    bblock::BuildingBlock blk([] {
        Vec e(2);
        e[0] = 1.0;
        e[1] = -0.5;
        return e;
    }());
    auto f = [&](double, const Vec& x) { return blk.eval(x); };
    Vec lo(2), hi(2);
    lo[0] = lo[1] = -0.4;
    hi[0] = hi[1] = 0.4;
    setenv("NONOSGOOD_THREADS", "1", 1);
    auto r1 = verify::divergence_residual(f, 2, 0.0, 2000, 1e-5, lo, hi, 1e-6, 77, "d", "t");
    setenv("NONOSGOOD_THREADS", "4", 1);
    auto r4 = verify::divergence_residual(f, 2, 0.0, 2000, 1e-5, lo, hi, 1e-6, 77, "d", "t");
    unsetenv("NONOSGOOD_THREADS");
    CHECK(r1.statistic == r4.statistic);
}
