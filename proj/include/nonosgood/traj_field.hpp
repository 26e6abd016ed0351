#pragma once

#include <functional>
#include <vector>

#include "nonosgood/bblock.hpp"
#include "nonosgood/common.hpp"
#include "nonosgood/geometry.hpp"
#include "nonosgood/moc.hpp"

namespace nonosgood::traj {

using FieldFn = std::function<Vec(double, const Vec&)>;

/// C^1 ramp profile: 0 below 0, 1 above 1, |chi'| <= 2 with equality at 1/2.
double chi(double s);
double chi_prime(double s);

struct TrajConfig {
    int d = 2;
    int n_max = 8;  // truncation generation
};

struct TimeGridS3 {
    std::vector<double> t;  // t[n] for n = 1..n_max (t[0] unused)
    double T = 0.0;
};

/// The parallelized cascade field b of the trajectory construction, truncated
/// at n_max generations, together with its radii, centers and time grid.
class TrajField {
public:
    TrajField(moc::ModulusPair pair, TrajConfig cfg);

    const TimeGridS3& grid() const { return grid_; }
    double T() const { return grid_.T; }
    const TrajConfig& config() const { return cfg_; }
    const moc::ModulusPair& pair() const { return pair_; }

    /// Window index m with t in [t_m, t_{m+1}); n_max when every truncated
    /// generation has finished.
    int window(double t) const;

    double radius(int n, double t) const;
    double radius_rate(int n, double t) const;

    Vec center(const geometry::SymbolString& sigma, double t) const;
    Vec center_rate(const geometry::SymbolString& sigma, double t) const;

    Vec eval(double t, const Vec& x) const;
    Vec eval_reversed(double t, const Vec& x) const;  // v(t,x) = -b(T-t,x)

    FieldFn field() const;
    FieldFn reversed_field() const;

    /// Certified sup-norm bound on the dropped generations > n_max at time t.
    double truncation_bound(double t) const;

private:
    struct Mover {
        int m;          // window
        double r;       // r_{m+1}(t)
        double chid;    // chi'(s)
        double wtilde;  // omega_tilde(r_{m+1}(t))
    };
    Mover mover(double t) const;

    moc::ModulusPair pair_;
    TrajConfig cfg_;
    TimeGridS3 grid_;
    std::vector<double> om_at_scale_;  // Omega(2^{-n-1}) for n = 0..n_max+1
    std::vector<bblock::BuildingBlock> blocks_;  // indexed by sign word
    double block_sup_;                           // measured sup|u^e|/|e|
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> points;
    Vec end;
    long n_evals = 0;
    long n_steps = 0;
};

/// Adaptive Dormand-Prince 4(5) with absolute local tolerance. Breakpoints
/// are never stepped across, and the step is capped at cap_frac times the
/// current segment length.
Trajectory integrate(const FieldFn& f, const Vec& x0, double t0, double t1, double tol,
                     const std::vector<double>& breakpoints = {}, double cap_frac = 1.0 / 16.0,
                     bool record = false);

}  // namespace nonosgood::traj
