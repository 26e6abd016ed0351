#include <cmath>

#include "doctest.h"
#include "nonosgood/bblock.hpp"
#include "nonosgood/traj_field.hpp"

using namespace nonosgood;
using bblock::BuildingBlock;

namespace {
Vec v2(double x, double y) {
    Vec v(2);
    v[0] = x;
    v[1] = y;
    return v;
}
}  // namespace

TEST_CASE("plateau and support are exact") {
    BuildingBlock b(v2(1.0, 0.0));
    Vec u = b.eval(v2(0.1, -0.2));
    CHECK(u[0] == 1.0);
    CHECK(u[1] == 0.0);
    u = b.eval(v2(0.0, 0.0));
    CHECK(u[0] == 1.0);
    CHECK(u[1] == 0.0);
    u = b.eval(v2(0.5, 0.5));
    CHECK(u[0] == 0.0);
    CHECK(u[1] == 0.0);
    Rng rng(0xb1);
    for (int s = 0; s < 500; ++s) {
        Vec x = v2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        int ax = rng.uniform_int(2);
        if (std::fabs(x[ax]) < 0.375) x[ax] = x[ax] >= 0 ? x[ax] + 0.375 : x[ax] - 0.375;
        CHECK(b.eval(x).norm_inf() == 0.0);
        Vec xin = v2(rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25));
        Vec uin = b.eval(xin);
        CHECK(uin[0] == 1.0);
        CHECK(uin[1] == 0.0);
    }
    // orthogonal direction is unit and perpendicular
    BuildingBlock bd(v2(3.0, 4.0));
    const Vec& et = bd.orthogonal();
    CHECK(et.norm2() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(et[0] * 3.0 + et[1] * 4.0 == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("linearity in the direction") {
    BuildingBlock b1(v2(0.3, -0.7));
    BuildingBlock b2(v2(0.6, -1.4));
    Rng rng(0xb2);
    for (int s = 0; s < 200; ++s) {
        Vec x = v2(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4));
        Vec u1 = b1.eval(x), u2 = b2.eval(x);
        CHECK(u2[0] == doctest::Approx(2.0 * u1[0]).epsilon(1e-13));
        CHECK(u2[1] == doctest::Approx(2.0 * u1[1]).epsilon(1e-13));
    }
}

TEST_CASE("finite-difference divergence vanishes in the transition shell") {
    BuildingBlock b(v2(1.0, 0.5));
    Rng rng(0xb3);
    double h = 1e-5;
    double worst_div = 0.0, scale = 0.0;
    for (int s = 0; s < 1000; ++s) {
        Vec x(2);
        for (int i = 0; i < 2; ++i) {
            double a = rng.uniform(0.25, 0.375);
            x[i] = rng.uniform() < 0.5 ? a : -a;
        }
        double div = 0.0;
        for (int i = 0; i < 2; ++i) {
            Vec xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            Vec fp = b.eval(xp), fm = b.eval(xm);
            div += (fp[i] - fm[i]) / (2 * h);
            for (int q = 0; q < 2; ++q)
                scale = std::max(scale, std::fabs(fp[q] - fm[q]) / (2 * h));
        }
        worst_div = std::max(worst_div, std::fabs(div));
    }
    CHECK(worst_div <= 1e-6 * scale);
}

TEST_CASE("analytic jacobian") {
    BuildingBlock b(v2(1.0, 2.0));
    double J[kMaxDim * kMaxDim];
    b.eval_grad(v2(0.05, -0.1), J);
    for (int i = 0; i < 4; ++i) CHECK(J[i] == 0.0);
    b.eval_grad(v2(0.6, 0.1), J);
    for (int i = 0; i < 4; ++i) CHECK(J[i] == 0.0);

    Rng rng(0xb4);
    double h = 1e-6;
    for (int s = 0; s < 100; ++s) {
        Vec x = v2(rng.uniform(-0.37, 0.37), rng.uniform(-0.37, 0.37));
        b.eval_grad(x, J);
        CHECK(std::fabs(J[0] + J[3]) <= 1e-12 * (1.0 + std::fabs(J[0])));  // exact trace zero
        double scale = 1.0;
        for (int i = 0; i < 4; ++i) scale = std::max(scale, std::fabs(J[i]));
        for (int col = 0; col < 2; ++col) {
            Vec xp = x, xm = x;
            xp[col] += h;
            xm[col] -= h;
            Vec fp = b.eval(xp), fm = b.eval(xm);
            for (int row = 0; row < 2; ++row)
                CHECK(std::fabs(J[row * 2 + col] - (fp[row] - fm[row]) / (2 * h)) <=
                      1e-5 * scale);
        }
    }
    CHECK(BuildingBlock::c1_constant(2) > 0.0);
}

TEST_CASE("the frozen block translates its plateau rigidly") {
    Vec e = v2(1.0, 0.0);
    BuildingBlock blk(e);
    auto fld = [&](double t, const Vec& x) {
        Vec arg = x;
        arg[0] -= t * e[0];
        arg[1] -= t * e[1];
        return blk.eval(arg);
    };
    Rng rng(0xb5);
    for (int s = 0; s < 10; ++s) {
        Vec x0 = v2(rng.uniform(-0.2, 0.1), rng.uniform(-0.2, 0.2));
        auto tr = traj::integrate(fld, x0, 0.0, 0.125, 1e-10);
        CHECK(std::fabs(tr.end[0] - (x0[0] + 0.125)) <= 1e-9);
        CHECK(std::fabs(tr.end[1] - x0[1]) <= 1e-9);
    }
}

TEST_CASE("bump profile") {
    CHECK(bblock::bump(0.2) == 1.0);
    CHECK(bblock::bump(0.25) == 1.0);
    CHECK(bblock::bump(0.375) == 0.0);
    CHECK(bblock::bump(0.5) == 0.0);
    CHECK(bblock::bump(0.3) > 0.0);
    CHECK(bblock::bump(0.3) < 1.0);
    // derivative consistency
    double h = 1e-7;
    for (double s : {0.27, 0.3, 0.33, -0.3}) {
        double fd = (bblock::bump(s + h) - bblock::bump(s - h)) / (2 * h);
        CHECK(bblock::bump_d1(s) == doctest::Approx(fd).epsilon(1e-4));
        double fd2 = (bblock::bump_d1(s + h) - bblock::bump_d1(s - h)) / (2 * h);
        CHECK(bblock::bump_d2(s) == doctest::Approx(fd2).epsilon(1e-3));
    }
}
