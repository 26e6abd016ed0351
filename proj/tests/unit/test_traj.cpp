#include <cmath>

#include "doctest.h"
#include "nonosgood/geometry.hpp"
#include "nonosgood/traj_field.hpp"

using namespace nonosgood;
using namespace nonosgood::traj;

namespace {
TrajField make_field(int n_max = 8) {
    moc::ModulusPair pair(moc::Modulus::catalog(2, 1), moc::Modulus::catalog(2, 0.5));
    TrajConfig cfg;
    cfg.d = 2;
    cfg.n_max = n_max;
    return TrajField(std::move(pair), cfg);
}
geometry::SymbolString random_sigma(int d, int n, uint64_t seed) {
    geometry::SymbolString s(d, n);
    Rng rng(seed);
    for (int g = 0; g < n; ++g)
        s.gen[static_cast<size_t>(g)] = static_cast<uint32_t>(rng.next_u64() & ((1u << d) - 1));
    return s;
}
}  // namespace

TEST_CASE("time grid") {
    auto fld = make_field();
    const auto& g = fld.grid();
    CHECK(g.t[1] == 0.0);
    CHECK(g.T == doctest::Approx(1.086845).epsilon(1e-6));
    CHECK(g.t[2] == doctest::Approx(0.096630).epsilon(1e-5));
    for (int n = 1; n < 8; ++n) CHECK(g.t[n] < g.t[n + 1]);
    // closed form t_n = T - Omega(2^{-n-1})
    const auto& wt = fld.pair().omega_tilde();
    for (int n = 1; n <= 8; ++n)
        CHECK(g.t[n] ==
              doctest::Approx(g.T - wt.osgood_total(-(n + 1) * std::log(2.0))).epsilon(1e-14));
}

TEST_CASE("ramp profile") {
    CHECK(chi(0.0) == 0.0);
    CHECK(chi(1.0) == 1.0);
    CHECK(chi(0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(chi(-1.0) == 0.0);
    CHECK(chi(2.0) == 1.0);
    CHECK(chi_prime(0.5) == doctest::Approx(2.0).epsilon(1e-15));  // the bound is attained
    CHECK(chi_prime(0.0) == 0.0);
    CHECK(chi_prime(1.0) == 0.0);
    double m = 0.0;
    for (int i = 0; i <= 1000; ++i) m = std::max(m, chi_prime(i / 1000.0));
    CHECK(m <= 2.0 + 1e-12);
}

TEST_CASE("radius cascade") {
    auto fld = make_field();
    const auto& g = fld.grid();
    for (double t : {0.0, 0.3 * g.T, 0.9 * g.T, g.T}) CHECK(fld.radius(1, t) == 0.5);
    for (int n = 1; n < 8; ++n)
        CHECK(fld.radius(n + 1, g.t[n + 1]) ==
              doctest::Approx(std::pow(2.0, -n - 1)).epsilon(1e-12));
    // quarter cascade below the active window
    double t = 0.5 * (g.t[2] + g.t[3]);
    for (int n = 4; n <= 8; ++n)
        CHECK(fld.radius(n, t) == doctest::Approx(fld.radius(n - 1, t) / 4.0).epsilon(1e-14));

    // mid-window value against the inverted antiderivative
    double tm = g.t[1] + 0.5 * (g.t[2] - g.t[1]);
    double y = fld.pair().omega_tilde().osgood_total(std::log(1.0 / 8)) +
               (g.t[2] - g.t[1]) * chi(0.5);
    CHECK(fld.radius(2, tm) == doctest::Approx(std::exp(2.0 - 4.0 / (y * y))).epsilon(1e-12));

    // C1 in time across window boundaries: one-sided slopes agree
    double h = 1e-8;
    for (int n = 2; n <= 4; ++n) {
        double tn = g.t[n];
        double left = (fld.radius(n + 1, tn) - fld.radius(n + 1, tn - h)) / h;
        double right = (fld.radius(n + 1, tn + h) - fld.radius(n + 1, tn)) / h;
        CHECK(std::fabs(left - right) <= 1e-6);
    }
    // rate identity on the active window
    double tmid = 0.5 * (g.t[3] + g.t[4]);
    double s = (tmid - g.t[3]) / (g.t[4] - g.t[3]);
    double r4 = fld.radius(4, tmid);
    double expect = chi_prime(s) * fld.pair().omega_tilde().eval_log(std::log(r4));
    CHECK(fld.radius_rate(4, tmid) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(fld.radius_rate(5, tmid) == doctest::Approx(expect / 4.0).epsilon(1e-12));
    CHECK(fld.radius_rate(2, tmid) == 0.0);
}

TEST_CASE("centers interpolate the cantor and dyadic grids") {
    auto fld = make_field();
    auto L = geometry::LengthSequence::uniform(1.0, 10);
    const auto& g = fld.grid();
    for (int n = 1; n <= 5; ++n) {
        auto s = random_sigma(2, n, 40 + static_cast<uint64_t>(n));
        Vec c0 = fld.center(s, 0.0);
        Vec p = geometry::cantor_center(L, s);
        CHECK(c0[0] == doctest::Approx(p[0]).epsilon(1e-15));
        CHECK(c0[1] == doctest::Approx(p[1]).epsilon(1e-15));
        Vec cT = fld.center(s, g.t[n]);
        Vec sd = geometry::dyadic_center(s);
        CHECK(cT[0] == doctest::Approx(sd[0]).epsilon(1e-14));
        CHECK(cT[1] == doctest::Approx(sd[1]).epsilon(1e-14));
    }
    // first generation never moves
    auto s1 = random_sigma(2, 1, 77);
    for (double t : {0.0, 0.2, 0.5, 1.0}) {
        Vec c = fld.center(s1, t * g.T);
        CHECK(std::fabs(std::fabs(c[0]) - 0.25) <= 1e-15);
        CHECK(std::fabs(std::fabs(c[1]) - 0.25) <= 1e-15);
    }
}

TEST_CASE("field support, endpoints and the center-path identity") {
    auto fld = make_field();
    const auto& g = fld.grid();
    Rng rng(0x7f1);
    for (int s = 0; s < 300; ++s) {
        Vec x(2);
        x[0] = rng.uniform(-2.0, 2.0);
        x[1] = rng.uniform(-2.0, 2.0);
        int ax = rng.uniform_int(2);
        if (std::fabs(x[ax]) < 0.5) x[ax] = x[ax] >= 0 ? x[ax] + 0.5 : x[ax] - 0.5;
        CHECK(fld.eval(rng.uniform(0.0, g.T), x).norm_inf() == 0.0);
        Vec inq(2);
        inq[0] = rng.uniform(-0.49, 0.49);
        inq[1] = rng.uniform(-0.49, 0.49);
        CHECK(fld.eval(0.0, inq).norm_inf() == 0.0);
        CHECK(fld.eval(g.T, inq).norm_inf() == 0.0);
    }
    double scale = 0.0, worst = 0.0;
    for (int s = 0; s < 300; ++s) {
        Rng r2 = Rng::stream(0x7f2, 0, static_cast<uint64_t>(s));
        double t = r2.uniform(1e-6, g.T * (1 - 1e-6));
        int n = 1 + r2.uniform_int(5);
        auto sigma = random_sigma(2, n, 555 + static_cast<uint64_t>(s));
        Vec c = fld.center(sigma, t);
        Vec rate = fld.center_rate(sigma, t);
        worst = std::max(worst, (fld.eval(t, c) - rate).norm2());
        scale = std::max(scale, rate.norm2());
    }
    CHECK(worst <= 1e-8 * scale);
}

TEST_CASE("containment of moving generations") {
    auto fld = make_field();
    const auto& g = fld.grid();
    Rng rng(0x7f3);
    for (int s = 0; s < 200; ++s) {
        int n = 1 + rng.uniform_int(5);
        double t = rng.uniform(0.0, g.t[n] * 0.999);
        auto sigma = random_sigma(2, n + 1, 800 + static_cast<uint64_t>(s));
        Vec c = fld.center(sigma, t);
        Vec cp = fld.center(sigma.prefix(), t);
        double rn = fld.radius(n, t), rn1 = fld.radius(n + 1, t);
        for (int i = 0; i < 2; ++i)
            CHECK(std::fabs(c[i] - cp[i]) + 0.5 * rn1 <= 0.25 * rn + 1e-14);
    }
}

TEST_CASE("reversed field") {
    auto fld = make_field();
    const auto& g = fld.grid();
    Rng rng(0x7f4);
    for (int s = 0; s < 100; ++s) {
        double t = rng.uniform(0.0, g.T);
        Vec x(2);
        x[0] = rng.uniform(-0.5, 0.5);
        x[1] = rng.uniform(-0.5, 0.5);
        Vec v = fld.eval_reversed(t, x);
        Vec b = fld.eval(g.T - t, x);
        CHECK(v[0] == -b[0]);  // bit-exact by definition
        CHECK(v[1] == -b[1]);
    }
    Vec x(2);
    x[0] = 0.2;
    x[1] = -0.3;
    CHECK(fld.eval_reversed(g.T, x).norm_inf() == 0.0);
}

TEST_CASE("integration targets") {
    auto fld = make_field();
    const auto& g = fld.grid();
    auto L = geometry::LengthSequence::uniform(1.0, 10);
    std::vector<double> brk(g.t.begin() + 1, g.t.end());

    auto zero = [](double, const Vec& x) { return Vec(x.d); };
    Vec x0(2);
    x0[0] = 0.3;
    x0[1] = -0.1;
    auto tr0 = integrate(zero, x0, 0.0, 1.0, 1e-12);
    CHECK(tr0.end[0] == 0.3);
    CHECK(tr0.end[1] == -0.1);

    for (int rep = 0; rep < 4; ++rep) {
        auto sigma = random_sigma(2, 3, 4000 + static_cast<uint64_t>(rep));
        Vec start = geometry::cantor_center(L, sigma);
        Vec target = geometry::dyadic_center(sigma);
        auto tr = integrate(fld.field(), start, 0.0, g.t[3], 1e-10, brk);
        CHECK((tr.end - target).norm2() <= 1e-4 * L.len(3));
    }
    // reverse flow takes dyadic centers back to cantor centers
    std::vector<double> rbrk;
    for (double b : brk) rbrk.push_back(g.T - b);
    auto sigma = random_sigma(2, 2, 4242);
    auto tr = integrate(fld.reversed_field(), geometry::dyadic_center(sigma), 0.0, g.T, 1e-10,
                        rbrk);
    CHECK((tr.end - geometry::cantor_center(L, sigma)).norm2() <= 1e-4 * L.len(2));
}

TEST_CASE("truncation") {
    auto fld = make_field(4);
    const auto& g = fld.grid();
    Rng rng(0x7f5);
    for (int s = 0; s < 50; ++s) {
        Vec x(2);
        x[0] = rng.uniform(-0.5, 0.5);
        x[1] = rng.uniform(-0.5, 0.5);
        CHECK(fld.eval(rng.uniform(g.t[4], g.T), x).norm_inf() == 0.0);
    }
    CHECK(fld.truncation_bound(0.5 * (g.t[1] + g.t[2])) > 0.0);
}

TEST_CASE("three-dimensional field targets its cubes too") {
    moc::ModulusPair pair(moc::Modulus::catalog(2, 1), moc::Modulus::catalog(2, 0.5));
    TrajConfig cfg;
    cfg.d = 3;
    cfg.n_max = 5;
    TrajField fld(pair, cfg);
    auto L = geometry::LengthSequence::uniform(1.0, 8);
    const auto& g = fld.grid();
    std::vector<double> brk(g.t.begin() + 1, g.t.end());
    Rng rng(0x3d);
    for (int rep = 0; rep < 6; ++rep) {
        int n = 1 + rng.uniform_int(2);
        geometry::SymbolString sigma(3, n);
        for (int gi = 0; gi < n; ++gi)
            sigma.gen[static_cast<size_t>(gi)] = static_cast<uint32_t>(rng.next_u64() & 7u);
        Vec start = geometry::cantor_center(L, sigma);
        auto tr = integrate(fld.field(), start, 0.0, g.t[n], 1e-9, brk);
        CHECK((tr.end - geometry::dyadic_center(sigma)).norm2() <= 1e-4 * L.len(n));
    }
    // support and center-path identity hold in three dimensions
    Vec out(3);
    out[0] = 0.7;
    CHECK(fld.eval(0.2, out).norm_inf() == 0.0);
    geometry::SymbolString sig(3, 3);
    sig.gen = {5u, 2u, 7u};
    double t = 0.4 * g.T;
    CHECK((fld.eval(t, fld.center(sig, t)) - fld.center_rate(sig, t)).norm2() <=
          1e-10 * (1.0 + fld.center_rate(sig, t).norm2()));
}
