#include "nonosgood/bblock.hpp"

#include <cmath>
#include <mutex>

namespace nonosgood::bblock {

namespace {

// smoothstep G(u) = B(u)/(B(u)+B(1-u)) with B(u) = exp(-1/u), written as a
// logistic in h(u) = 1/u - 1/(1-u) so a single exp is needed
struct GEval {
    double g, g1, g2;
};

GEval smoothstep(double u) {
    if (u <= 1e-12) return {0.0, 0.0, 0.0};
    if (u >= 1.0 - 1e-12) return {1.0, 0.0, 0.0};
    double h = 1.0 / u - 1.0 / (1.0 - u);
    if (h > 500.0) return {0.0, 0.0, 0.0};
    if (h < -500.0) return {1.0, 0.0, 0.0};
    double E = std::exp(h);
    double inv = 1.0 / (1.0 + E);
    double P = E * inv * inv;  // E/(1+E)^2
    double h1 = -1.0 / (u * u) - 1.0 / ((1.0 - u) * (1.0 - u));
    double h2 = 2.0 / (u * u * u) - 2.0 / ((1.0 - u) * (1.0 - u) * (1.0 - u));
    double G = 1.0 * inv;  // 1/(1+E) = B/(B+B~)
    double G1 = -h1 * P;
    double dP = h1 * P * (1.0 - E) * inv;
    double G2 = -h2 * P - h1 * dP;
    return {G, G1, G2};
}

}  // namespace

double bump(double s) { return smoothstep((0.375 - std::fabs(s)) * 8.0).g; }

double bump_d1(double s) {
    double sg = s >= 0.0 ? 1.0 : -1.0;
    return -8.0 * sg * smoothstep((0.375 - std::fabs(s)) * 8.0).g1;
}

double bump_d2(double s) { return 64.0 * smoothstep((0.375 - std::fabs(s)) * 8.0).g2; }

BuildingBlock::BuildingBlock(const Vec& e) : e_(e), d_(e.d) {
    if (d_ < 2) throw domain_error("building block needs dimension >= 2");
    double n12 = std::hypot(e.c[0], e.c[1]);
    et_ = Vec(d_);
    if (n12 > 0.0) {
        et_[0] = e.c[1] / n12;
        et_[1] = -e.c[0] / n12;
    } else {
        et_[0] = 1.0;
    }
}

Vec BuildingBlock::eval(const Vec& x) const {
    // u = [prod g + (et.x) S_et] e - [(et.x) S_e] et, S_v = sum v_i g'(x_i) prod_{j!=i} g
    double prod = 1.0;
    double g[kMaxDim], g1[kMaxDim];
    for (int i = 0; i < d_; ++i) {
        double ax = std::fabs(x[i]);
        if (ax >= 0.375) return Vec(d_);
        if (ax <= 0.25) {
            g[i] = 1.0;
            g1[i] = 0.0;
        } else {
            GEval ge = smoothstep((0.375 - ax) * 8.0);
            g[i] = ge.g;
            g1[i] = -8.0 * (x[i] >= 0.0 ? 1.0 : -1.0) * ge.g1;
        }
        prod *= g[i];
    }
    double etx = 0.0;
    for (int i = 0; i < d_; ++i) etx += et_[i] * x[i];
    double s_et = 0.0, s_e = 0.0;
    for (int i = 0; i < d_; ++i) {
        if (g1[i] == 0.0) continue;
        double rest = g1[i];
        for (int j = 0; j < d_; ++j)
            if (j != i) rest *= g[j];
        s_et += et_[i] * rest;
        s_e += e_[i] * rest;
    }
    double A = prod + etx * s_et;
    double B = etx * s_e;
    Vec u(d_);
    for (int i = 0; i < d_; ++i) u[i] = A * e_[i] - B * et_[i];
    return u;
}

void BuildingBlock::eval_grad(const Vec& x, double* J) const {
    for (int i = 0; i < d_ * d_; ++i) J[i] = 0.0;
    double g[kMaxDim], g1[kMaxDim], g2[kMaxDim];
    for (int i = 0; i < d_; ++i) {
        double ax = std::fabs(x[i]);
        if (ax >= 0.375) return;
        if (ax <= 0.25) {
            g[i] = 1.0;
            g1[i] = g2[i] = 0.0;
        } else {
            GEval ge = smoothstep((0.375 - ax) * 8.0);
            double sg = x[i] >= 0.0 ? 1.0 : -1.0;
            g[i] = ge.g;
            g1[i] = -8.0 * sg * ge.g1;
            g2[i] = 64.0 * ge.g2;
        }
    }
    double etx = 0.0;
    for (int i = 0; i < d_; ++i) etx += et_[i] * x[i];
    // per-axis products with one (or two) factors replaced by derivatives
    auto prod_except = [&](int skip) {
        double p = 1.0;
        for (int j = 0; j < d_; ++j)
            if (j != skip) p *= g[j];
        return p;
    };
    auto prod_except2 = [&](int s1, int s2) {
        double p = 1.0;
        for (int j = 0; j < d_; ++j)
            if (j != s1 && j != s2) p *= g[j];
        return p;
    };
    double s_et = 0.0, s_e = 0.0;
    for (int i = 0; i < d_; ++i) {
        if (g1[i] == 0.0) continue;
        double rest = g1[i] * prod_except(i);
        s_et += et_[i] * rest;
        s_e += e_[i] * rest;
    }
    for (int k = 0; k < d_; ++k) {
        // dS_v/dx_k = v_k g''_k prod_{j!=k} g + sum_{i!=k} v_i g'_i g'_k prod_{j!=i,k} g
        double ds_et = et_[k] * g2[k] * prod_except(k);
        double ds_e = e_[k] * g2[k] * prod_except(k);
        for (int i = 0; i < d_; ++i) {
            if (i == k || g1[i] == 0.0) continue;
            double cross = g1[i] * g1[k] * prod_except2(i, k);
            ds_et += et_[i] * cross;
            ds_e += e_[i] * cross;
        }
        double dA = g1[k] * prod_except(k) + et_[k] * s_et + etx * ds_et;
        double dB = et_[k] * s_e + etx * ds_e;
        for (int i = 0; i < d_; ++i) J[i * d_ + k] = dA * e_[i] - dB * et_[i];
    }
}

double BuildingBlock::c1_constant(int d) {
    static std::mutex mu;
    static double cache[kMaxDim + 1] = {0};
    std::lock_guard<std::mutex> lk(mu);
    if (cache[d] > 0.0) return cache[d];
    Vec e(d);
    e[0] = 1.0;
    BuildingBlock blk(e);
    Rng rng(0x5eedu + static_cast<unsigned>(d));
    double J[kMaxDim * kMaxDim];
    double worst = 0.0;
    for (int s = 0; s < 20000; ++s) {
        Vec x(d);
        for (int i = 0; i < d; ++i) x[i] = rng.uniform(-0.375, 0.375);
        blk.eval_grad(x, J);
        double m = 0.0;
        for (int i = 0; i < d * d; ++i) m = std::max(m, std::fabs(J[i]));
        worst = std::max(worst, m);
    }
    cache[d] = worst;
    return worst;
}

}  // namespace nonosgood::bblock
