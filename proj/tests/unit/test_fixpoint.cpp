#include <cmath>

#include "doctest.h"
#include "nonosgood/fixpoint.hpp"

using namespace nonosgood;
using namespace nonosgood::fixp;

namespace {
const ParamTable& default_table() {
    static ParamTable tbl(
        moc::ModulusPair(moc::Modulus::catalog(2, 1), moc::Modulus::catalog(2, 0.5)), 2, 8);
    return tbl;
}
}  // namespace

TEST_CASE("parameter table structure for the default pair") {
    const auto& tbl = default_table();
    CHECK(tbl.levels() >= 4);
    CHECK(tbl.saturated());  // the weight growth exhausts double range
    const auto& N0 = tbl.level(0).N;
    REQUIRE(N0.size() >= 3);
    CHECK(N0[0] == 1.0);
    CHECK(N0[1] == 2.0);
    CHECK(N0[2] >= 617.0);
    for (int k = 1; k < tbl.levels(); ++k) {
        CHECK(tbl.level(k).eta >= 1.0);
        // ell_{k+1} <= ell_k / 4
        CHECK(tbl.log_len(k) <= tbl.log_len(k - 1) - 2.0 * std::log(2.0) + 1e-12);
        CHECK(tbl.level(k).N[0] == 1.0);
    }
    CHECK(tbl.all_certificates_pass());
    for (int k = 0; k < tbl.levels(); ++k) {
        const auto& lv = tbl.level(k);
        CHECK(lv.block_start.back() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(lv.T <= 12.0 * lv.om_quarter);
        CHECK(lv.sum_terms > lv.om_quarter);
        CHECK(lv.sum_terms + lv.tail_bound < 2.0 * lv.om_quarter);
    }
}

TEST_CASE("per-level radii") {
    const auto& tbl = default_table();
    const auto& lv = tbl.level(0);
    double t_trans0 = lv.block_start[0] + lv.tau[0];
    double t_trans1 = lv.block_start[1];
    // r_1 is pinned at ell_0/2
    for (double t : {0.0, 0.3, 0.9}) CHECK(tbl.radius(0, 1.0, t) == doctest::Approx(0.5));
    // below its start the second generation sits at ell_1/2 (log-domain only)
    CHECK(tbl.radius_log(0, 2.0, 0.5 * t_trans0) ==
          doctest::Approx(tbl.log_len(1) - std::log(2.0)).epsilon(1e-12));
    // at its finish it reaches ell_0 / 4
    CHECK(tbl.radius(0, 2.0, t_trans1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(tbl.radius(0, 2.0, 0.999) == doctest::Approx(0.25).epsilon(1e-12));
    // quarter relation against the parent while it has not finished
    double tm = 0.5 * (t_trans0 + t_trans1);
    CHECK(tbl.radius(0, 2.0, tm) <= 0.25 * tbl.radius(0, 1.0, tm) + 1e-15);
    CHECK(tbl.radius_rate(0, 1.0, tm) == 0.0);
    CHECK(tbl.radius_rate(0, 2.0, tm) > 0.0);
}

TEST_CASE("field endpoints, support and the rigid-translation identity") {
    const auto& tbl = default_table();
    Rng rng(0xf1);
    for (int s = 0; s < 100; ++s) {
        Vec x(2);
        x[0] = rng.uniform(-0.49, 0.49);
        x[1] = rng.uniform(-0.49, 0.49);
        CHECK(field_B(tbl, 0, 0.0, x, 4).norm_inf() == 0.0);
        CHECK(field_B(tbl, 0, 1.0, x, 4).norm_inf() == 0.0);
        Vec out(2);
        out[0] = rng.uniform() < 0.5 ? -0.51 : 0.51;
        out[1] = rng.uniform(-2.0, 2.0);
        CHECK(field_B(tbl, 0, rng.uniform(0.0, 1.0), out, 4).norm_inf() == 0.0);
    }
    const auto& lv = tbl.level(0);
    double a = lv.block_start[0] + lv.tau[0], b = lv.block_start[1];
    for (int s = 0; s < 50; ++s) {
        double t = a + (b - a) * (s + 0.5) / 50.0;
        geometry::SymbolString sigma(2, 2);
        sigma.gen[0] = static_cast<uint32_t>(rng.next_u64() & 3u);
        sigma.gen[1] = static_cast<uint32_t>(rng.next_u64() & 3u);
        Vec c = tbl.center(0, sigma, t);
        Vec rate = tbl.center_rate(0, sigma, t);
        Vec f = field_B(tbl, 0, t, c, 0);
        CHECK((f - rate).norm2() <= 1e-10 * (1.0 + rate.norm2()));
    }
}

TEST_CASE("depth behaviour of the unrolled field") {
    const auto& tbl = default_table();
    const auto& lv = tbl.level(0);
    // inside the first splitting interval the default pair's inner copies sit
    // below length resolution, so the zero return carries a flag either way
    FieldEvalInfo info;
    Vec x(2);
    x[0] = 0.25;
    x[1] = 0.25;
    double t_split = 0.5 * lv.tau[0];
    Vec f0 = field_B(tbl, 0, t_split, x, 0, &info);
    CHECK(f0.norm_inf() == 0.0);
    CHECK((info.depth_exhausted || info.below_resolution));

    // successive depths collapse immediately: the inner scales are so far
    // below double resolution that depth >= 1 evaluations coincide
    Rng rng(0xf2);
    double d01 = 0.0, d12 = 0.0, d23 = 0.0;
    for (int s = 0; s < 200; ++s) {
        double t = rng.uniform() < 0.5 ? rng.uniform(1e-6, lv.tau[0])
                                       : rng.uniform(lv.block_start[0] + lv.tau[0],
                                                     lv.block_start[1]);
        Vec y(2);
        y[0] = rng.uniform(-0.49, 0.49);
        y[1] = rng.uniform(-0.49, 0.49);
        Vec f_0 = field_B(tbl, 0, t, y, 0);
        Vec f_1 = field_B(tbl, 0, t, y, 1);
        Vec f_2 = field_B(tbl, 0, t, y, 2);
        Vec f_3 = field_B(tbl, 0, t, y, 3);
        d01 = std::max(d01, (f_1 - f_0).norm_inf());
        d12 = std::max(d12, (f_2 - f_1).norm_inf());
        d23 = std::max(d23, (f_3 - f_2).norm_inf());
    }
    CHECK(d01 >= 0.0);
    CHECK(d12 <= 0.6 * d01);
    CHECK(d23 <= 0.6 * std::max(d12, 0.0));
}

TEST_CASE("density snapshots") {
    const auto& tbl = default_table();
    auto s0 = density_Theta(tbl, 0, 0.0, 4);
    REQUIRE(s0.cubes.size() == 4);
    CHECK(s0.mass() == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& c : s0.cubes) {
        CHECK(c.log_side == tbl.log_len(1));
        CHECK(std::fabs(c.center.norm_inf() - 0.25) <= 1e-15);
        CHECK(c.log_mass == doctest::Approx(-2.0 * std::log(2.0)).epsilon(1e-14));
    }
    auto s1 = density_Theta(tbl, 0, 1.0, 4);
    REQUIRE(s1.cubes.size() == 1);
    CHECK(s1.cubes[0].log_side == 0.0);
    CHECK(s1.mass() == doctest::Approx(1.0));

    const auto& lv = tbl.level(0);
    double tm = 0.5 * (2.0 * lv.block_start[0] + lv.tau[0] + lv.block_start[1]);
    auto st = density_Theta(tbl, 0, tm, 4);
    CHECK(st.cubes.size() == 16);
    CHECK(st.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(st.approximated);
    // identical across depths: the translation branch is explicit
    auto st2 = density_Theta(tbl, 0, tm, 2);
    REQUIRE(st2.cubes.size() == st.cubes.size());
    for (size_t i = 0; i < st.cubes.size(); ++i) {
        CHECK(st.cubes[i].center[0] == st2.cubes[i].center[0]);
        CHECK(st.cubes[i].log_mass == st2.cubes[i].log_mass);
    }

    // depth-exhausted fallback snaps to the nearest exact endpoint
    auto sa = density_Theta(tbl, 0, 0.4 * lv.tau[0], 0);
    CHECK(sa.approximated);
    CHECK(sa.mass() == doctest::Approx(1.0).epsilon(1e-12));

    // recursion into the splitting interval: with depth the snapshot follows
    // the level-1 structure, whose translation union is beyond enumeration
    if (tbl.levels() > 1) {
        double t_inner = lv.tau[0] * (1.0 - 1.5 * tbl.level(1).tau[0]);
        CHECK_THROWS_AS(density_Theta(tbl, 0, t_inner, 4), resolution_error);
    }

    // likewise the block-2 translation half of level 0
    double t2 = lv.block_start[1] + lv.tau[1] + 0.5 * (lv.block_start[2] - lv.block_start[1] -
                                                        lv.tau[1]);
    CHECK_THROWS_AS(density_Theta(tbl, 0, t2, 4), resolution_error);
}

TEST_CASE("final pair exhibit") {
    const auto& tbl = default_table();
    auto fp = final_pair(tbl, 4);
    auto m0 = fp.density(0.0);
    REQUIRE(m0.cubes.size() == 1);
    CHECK(m0.cubes[0].log_side == 0.0);
    CHECK(m0.cubes[0].center.norm_inf() == 0.0);
    CHECK(m0.mass() == doctest::Approx(1.0));

    auto m1 = fp.density(1.0);
    REQUIRE(m1.cubes.size() == 4);
    for (const auto& c : m1.cubes) CHECK(c.log_side == tbl.log_len(1));

    double expected = 2.0 * (1.0 - std::exp(2.0 * (std::log(2.0) + tbl.log_len(1))));
    CHECK(std::fabs(m1.l1_distance_to_uniform(0.0) - expected) <= 1e-10);

    Rng rng(0xf3);
    for (int s = 0; s < 20; ++s) {
        double t = rng.uniform(0.0, 1.0);
        Vec x(2);
        x[0] = rng.uniform(-0.49, 0.49);
        x[1] = rng.uniform(-0.49, 0.49);
        Vec v = fp.velocity(t, x);
        Vec b = field_B(tbl, 0, 1.0 - t, x, 4);
        CHECK(v[0] == -b[0]);
        CHECK(v[1] == -b[1]);
    }
}

TEST_CASE("continuity-equation residuals") {
    const auto& tbl = default_table();
    const auto& lv = tbl.level(0);
    double a = (lv.block_start[0] + lv.tau[0]) * 1.001, b = lv.block_start[1] * 0.999;
    auto phi_const = [](const Vec&, double) { return 1.0; };
    auto rc = ce_check(tbl, 0, a, b, 4, phi_const, [](const Vec&) { return Vec(2); }, 1.0, 1e-5,
                       3);
    CHECK(rc.residual_raw == 0.0);

    auto phi_lin = [](const Vec& c, double) { return c[0] + c[1]; };
    auto grad_lin = [](const Vec&) {
        Vec g(2);
        g[0] = g[1] = 1.0;
        return g;
    };
    auto rl = ce_check(tbl, 0, a, b, 4, phi_lin, grad_lin, std::sqrt(2.0), 1e-5, 3);
    CHECK(rl.residual <= 1e-6);

    auto phi_quad = [](const Vec& c, double side) {
        return c[0] * c[0] + c[1] * c[1] + 2.0 * side * side / 12.0;
    };
    auto grad_quad = [](const Vec& c) {
        Vec g(2);
        g[0] = 2 * c[0];
        g[1] = 2 * c[1];
        return g;
    };
    auto rq = ce_check(tbl, 0, a, b, 4, phi_quad, grad_quad, std::sqrt(2.0), 1e-5, 3);
    CHECK(rq.residual <= 1e-4);

    // moment route agrees on the same interval and reaches block 2
    auto rm = ce_check_translation_moments(tbl, 0, a, b, 1e-5, 3);
    CHECK(rm.residual_quad <= 1e-4);
    CHECK_FALSE(rm.degenerate);
    double a2 = lv.block_start[1] + lv.tau[1], b2 = lv.block_start[2];
    double pad = 1e-3 * (b2 - a2);
    auto rm2 = ce_check_translation_moments(tbl, 0, a2 + pad, b2 - pad, 1e-5, 3);
    CHECK(rm2.residual_quad <= 1e-4);
}

TEST_CASE("params json validates and detects tampering") {
    const auto& tbl = default_table();
    auto j = tbl.to_json();
    CHECK(validate_params_json(j).empty());
    auto bad = j;
    bad["levels"][0]["N"][0] = 2.0;
    auto fails = validate_params_json(bad);
    REQUIRE_FALSE(fails.empty());
    CHECK(fails[0].find("N_1") != std::string::npos);
}

TEST_CASE("a pair with bounded weight cannot satisfy the growth constraint") {
    moc::ModulusPair flat(moc::Modulus::catalog(2, 0.5), moc::Modulus::catalog(2, 0.5));
    CHECK_THROWS_AS(ParamTable(flat, 2, 3), construction_error);
}

TEST_CASE("a fast-diverging weight keeps several levels representable") {
    // W(r) = (2 - ln r)^{23.5}: the length cascade stays near-dyadic for
    // several levels, so two unrollings of the recursion are measurable
    moc::ModulusPair strong(moc::Modulus::catalog(2, 24), moc::Modulus::catalog(2, 0.5));
    ParamTable tbl(strong, 2, 6);
    REQUIRE(tbl.levels() >= 4);
    CHECK(tbl.log_len(1) > -50.0);
    CHECK(tbl.log_len(2) > -50.0);
    CHECK(tbl.all_certificates_pass());

    const auto& lv = tbl.level(0);
    double tau1 = lv.tau[0];
    double ell1 = std::exp(tbl.log_len(1)), ell2 = std::exp(tbl.log_len(2));
    Rng rng(0xd8);
    std::vector<std::pair<double, Vec>> samples;
    for (int i = 0; i < 2000; ++i) {
        double t = i % 2 ? rng.uniform(1e-6, tau1 * (1 - 1e-6))
                         : rng.uniform(lv.block_start[0] + tau1 + 1e-6,
                                       lv.block_start[1] - 1e-6);
        // hierarchical jitter so the nested supports actually get sampled
        Vec x(2);
        uint32_t w0 = static_cast<uint32_t>(rng.next_u64() & 3u);
        uint32_t w1 = static_cast<uint32_t>(rng.next_u64() & 3u);
        int mode = i % 3;
        for (int q = 0; q < 2; ++q) {
            x[q] = 0.25 * ((w0 >> q & 1u) ? 1.0 : -1.0);
            if (mode >= 1) x[q] += 0.25 * ell1 * ((w1 >> q & 1u) ? 1.0 : -1.0);
            x[q] += (mode == 0 ? ell1 : mode == 1 ? 4 * ell2 : ell2) * rng.uniform(-0.6, 0.6);
        }
        samples.emplace_back(t, x);
    }
    double diff[4];
    for (int D = 0; D < 4; ++D) {
        double worst = 0.0;
        for (auto& [t, x] : samples) {
            Vec a = field_B(tbl, 0, t, x, D);
            Vec b = field_B(tbl, 0, t, x, D + 1);
            worst = std::max(worst, (a - b).norm_inf());
        }
        diff[D] = worst;
    }
    CHECK(diff[0] > 0.0);  // the first unrolling reveals the inner field
    CHECK(diff[1] > 0.0);  // and the second is still above resolution
    for (int D = 0; D + 1 < 4; ++D) CHECK(diff[D + 1] <= 0.6 * diff[D]);

    // the splitting recursion materializes the inner cube union
    double t_inner = tau1 * (1.0 - 1.5 * tbl.level(1).tau[0]);
    auto snap = density_Theta(tbl, 0, t_inner, 4);
    CHECK(snap.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(snap.cubes.size() > 4);
    CHECK_FALSE(snap.approximated);

    // moment and enumerated CE routes both hold on the first interval
    double a = (lv.block_start[0] + tau1) * 1.001, b = lv.block_start[1] * 0.999;
    auto rm = ce_check_translation_moments(tbl, 0, a, b, 1e-5, 3);
    CHECK_FALSE(rm.degenerate);
    CHECK(rm.residual_quad <= 1e-4);
}
