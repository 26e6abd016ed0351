#include "nonosgood/traj_field.hpp"

#include <algorithm>
#include <cmath>

namespace nonosgood::traj {

namespace {
constexpr double kLn2 = 0.6931471805599453;
constexpr double kTwoPi = 6.283185307179586;
}  // namespace

double chi(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return s - std::sin(kTwoPi * s) / kTwoPi;
}

double chi_prime(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return 1.0 - std::cos(kTwoPi * s);
}

TrajField::TrajField(moc::ModulusPair pair, TrajConfig cfg)
    : pair_(std::move(pair)), cfg_(cfg) {
    if (cfg_.d < 2 || cfg_.d > kMaxDim) throw domain_error("trajectory field: bad dimension");
    if (cfg_.n_max < 2) throw construction_error("trajectory field: n_max >= 2 required");
    const auto& wt = pair_.omega_tilde();
    if (!wt.non_osgood())
        throw divergence_error("trajectory field needs a non-Osgood auxiliary modulus");
    om_at_scale_.resize(static_cast<size_t>(cfg_.n_max) + 3);
    for (int n = 0; n <= cfg_.n_max + 2; ++n)
        om_at_scale_[n] = wt.osgood_total(-(n + 1) * kLn2);  // Omega(2^{-n-1})
    grid_.T = om_at_scale_[1];  // Omega(1/4)
    grid_.t.resize(static_cast<size_t>(cfg_.n_max) + 1);
    for (int n = 1; n <= cfg_.n_max; ++n) grid_.t[n] = grid_.T - om_at_scale_[n];

    int words = 1 << cfg_.d;
    blocks_.reserve(words);
    block_sup_ = 0.0;
    for (int w = 0; w < words; ++w) {
        Vec e(cfg_.d);
        for (int i = 0; i < cfg_.d; ++i) e[i] = (w >> i) & 1 ? 1.0 : -1.0;
        blocks_.emplace_back(e);
    }
    Rng rng(0xb10cull);
    for (int s = 0; s < 4000; ++s) {
        Vec x(cfg_.d);
        for (int i = 0; i < cfg_.d; ++i) x[i] = rng.uniform(-0.375, 0.375);
        block_sup_ = std::max(block_sup_, blocks_[0].eval(x).norm_inf());
    }
    block_sup_ /= std::sqrt(static_cast<double>(cfg_.d));
}

int TrajField::window(double t) const {
    if (t >= grid_.t[cfg_.n_max]) return cfg_.n_max;
    int m = 1;
    while (m + 1 <= cfg_.n_max && t >= grid_.t[m + 1]) ++m;
    return m;
}

TrajField::Mover TrajField::mover(double t) const {
    Mover mv;
    mv.m = window(t);
    if (mv.m >= cfg_.n_max) {
        mv.r = std::pow(2.0, -mv.m - 1);
        mv.chid = 0.0;
        mv.wtilde = 0.0;
        return mv;
    }
    double dt = grid_.t[mv.m + 1] - grid_.t[mv.m];
    double s = (t - grid_.t[mv.m]) / dt;
    double lam = pair_.omega_tilde().inverse_osgood(om_at_scale_[mv.m + 1] + dt * chi(s));
    mv.r = std::exp(lam);
    mv.chid = chi_prime(s);
    mv.wtilde = std::exp(pair_.omega_tilde().log_eval(lam));
    return mv;
}

double TrajField::radius(int n, double t) const {
    Mover mv = mover(t);
    if (n <= mv.m) return std::pow(2.0, -n);
    return std::pow(4.0, mv.m + 1 - n) * mv.r;
}

double TrajField::radius_rate(int n, double t) const {
    Mover mv = mover(t);
    if (n <= mv.m || mv.m >= cfg_.n_max) return 0.0;
    return std::pow(4.0, mv.m + 1 - n) * mv.chid * mv.wtilde;
}

Vec TrajField::center(const geometry::SymbolString& sigma, double t) const {
    Mover mv = mover(t);
    Vec c(cfg_.d);
    for (int n = 1; n <= sigma.length(); ++n) {
        double r = n <= mv.m ? std::pow(2.0, -n) : std::pow(4.0, mv.m + 1 - n) * mv.r;
        for (int i = 0; i < cfg_.d; ++i) c[i] += 0.5 * r * sigma.sign(n - 1, i);
    }
    return c;
}

Vec TrajField::center_rate(const geometry::SymbolString& sigma, double t) const {
    Mover mv = mover(t);
    Vec c(cfg_.d);
    if (mv.m >= cfg_.n_max) return c;
    for (int n = std::max(1, mv.m + 1); n <= sigma.length(); ++n) {
        double rate = std::pow(4.0, mv.m + 1 - n) * mv.chid * mv.wtilde;
        for (int i = 0; i < cfg_.d; ++i) c[i] += 0.5 * rate * sigma.sign(n - 1, i);
    }
    return c;
}

Vec TrajField::eval(double t, const Vec& x) const {
    Vec out(cfg_.d);
    if (x.norm_inf() >= 0.5) return out;
    Mover mv = mover(t);
    if (mv.m >= cfg_.n_max || mv.chid == 0.0) return out;

    Vec c(cfg_.d);
    Vec arg(cfg_.d);
    for (int n = 1; n <= cfg_.n_max; ++n) {
        double r = n <= mv.m ? std::pow(2.0, -n) : std::pow(4.0, mv.m + 1 - n) * mv.r;
        uint32_t word = 0;
        for (int i = 0; i < cfg_.d; ++i)
            if (x[i] - c[i] >= 0.0) word |= 1u << i;
        const Vec& e = blocks_[word].direction();
        bool inside = true;
        for (int i = 0; i < cfg_.d; ++i) {
            c[i] += 0.5 * r * e[i];
            if (std::fabs(x[i] - c[i]) > 0.5 * r) inside = false;
        }
        if (!inside) break;
        if (n > mv.m) {
            double rate = std::pow(4.0, mv.m + 1 - n) * mv.chid * mv.wtilde;
            double inv_r = 1.0 / r;
            for (int i = 0; i < cfg_.d; ++i) arg[i] = (x[i] - c[i]) * inv_r;
            arg.d = cfg_.d;
            Vec u = blocks_[word].eval(arg);
            for (int i = 0; i < cfg_.d; ++i) out[i] += 0.5 * rate * u[i];
        }
    }
    return out;
}

Vec TrajField::eval_reversed(double t, const Vec& x) const {
    Vec u = eval(grid_.T - t, x);
    for (int i = 0; i < cfg_.d; ++i) u[i] = -u[i];
    return u;
}

FieldFn TrajField::field() const {
    return [this](double t, const Vec& x) { return eval(t, x); };
}

FieldFn TrajField::reversed_field() const {
    return [this](double t, const Vec& x) { return eval_reversed(t, x); };
}

double TrajField::truncation_bound(double t) const {
    Mover mv = mover(t);
    if (mv.m >= cfg_.n_max) {
        // dropped generations still move after t_{n_max}
        double wt = std::exp(pair_.omega_tilde().log_eval(-(mv.m + 1) * kLn2));
        return block_sup_ * std::sqrt(static_cast<double>(cfg_.d)) * wt;
    }
    double geom = std::pow(4.0, mv.m + 1 - cfg_.n_max) / 3.0;
    return 0.5 * block_sup_ * std::sqrt(static_cast<double>(cfg_.d)) * mv.chid * mv.wtilde * geom;
}

namespace {

// Dormand-Prince 5(4) tableau
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
                 B6 = 11.0 / 84;
constexpr double E1 = 35.0 / 384 - 5179.0 / 57600, E3 = 500.0 / 1113 - 7571.0 / 16695,
                 E4 = 125.0 / 192 - 393.0 / 640, E5 = -2187.0 / 6784 + 92097.0 / 339200,
                 E6 = 11.0 / 84 - 187.0 / 2100, E7 = -1.0 / 40;

}  // namespace

Trajectory integrate(const FieldFn& f, const Vec& x0, double t0, double t1, double tol,
                     const std::vector<double>& breakpoints, double cap_frac, bool record) {
    if (!(t0 <= t1)) throw domain_error("integrate needs t0 <= t1");
    Trajectory traj;
    if (record) {
        traj.times.push_back(t0);
        traj.points.push_back(x0);
    }
    if (t1 == t0) {
        traj.end = x0;
        return traj;
    }
    std::vector<double> seg{t0};
    for (double b : breakpoints)
        if (b > t0 + 1e-15 && b < t1 - 1e-15) seg.push_back(b);
    seg.push_back(t1);
    std::sort(seg.begin(), seg.end());

    Vec x = x0;
    int d = x0.d;
    Vec k1(d), k2(d), k3(d), k4(d), k5(d), k6(d), k7(d), xt(d), x5(d);
    for (size_t si = 0; si + 1 < seg.size(); ++si) {
        double t = seg[si], tend = seg[si + 1];
        double span = tend - t;
        if (span <= 0.0) continue;
        double hmax = span * cap_frac;
        double h = hmax * 0.25;
        k1 = f(t, x);
        traj.n_evals++;
        while (t < tend - 1e-15 * (t1 - t0 + 1.0)) {
            h = std::min(h, tend - t);
            h = std::min(h, hmax);
            auto stage = [&](double frac, const Vec& y) {
                traj.n_evals++;
                return f(t + frac * h, y);
            };
            for (int i = 0; i < d; ++i) xt[i] = x[i] + h * A21 * k1[i];
            k2 = stage(0.2, xt);
            for (int i = 0; i < d; ++i) xt[i] = x[i] + h * (A31 * k1[i] + A32 * k2[i]);
            k3 = stage(0.3, xt);
            for (int i = 0; i < d; ++i)
                xt[i] = x[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            k4 = stage(0.8, xt);
            for (int i = 0; i < d; ++i)
                xt[i] = x[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            k5 = stage(8.0 / 9.0, xt);
            for (int i = 0; i < d; ++i)
                xt[i] = x[i] +
                        h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            k6 = stage(1.0, xt);
            for (int i = 0; i < d; ++i)
                x5[i] = x[i] +
                        h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            k7 = stage(1.0, x5);
            double err = 0.0;
            for (int i = 0; i < d; ++i) {
                double e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] +
                                E7 * k7[i]);
                err = std::max(err, std::fabs(e));
            }
            if (err <= tol || h <= 1e-14 * span) {
                if (h <= 1e-14 * span && err > 64.0 * tol)
                    throw stiffness_error("integrator step size underflow");
                t += h;
                x = x5;
                k1 = k7;  // FSAL
                traj.n_steps++;
                if (record) {
                    traj.times.push_back(t);
                    traj.points.push_back(x);
                }
            }
            double fac = err > 0.0 ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
            h *= std::clamp(fac, 0.2, 5.0);
        }
        if (record && (traj.times.empty() || traj.times.back() != tend)) {
            traj.times.push_back(tend);
            traj.points.push_back(x);
        }
    }
    traj.end = x;
    return traj;
}

}  // namespace nonosgood::traj
