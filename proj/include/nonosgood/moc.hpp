#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nonosgood/common.hpp"

namespace nonosgood::moc {

/// A modulus of continuity: continuous, strictly increasing, concave, w(0)=0.
/// All evaluation happens in the log-length coordinate lam = ln r, so moduli
/// stay usable far below the double underflow threshold for raw lengths.
class Modulus {
public:
    enum class Kind { Catalog, PiecewiseAffine, Tabulated };

    // w_{a,eps}(z) = z (a - ln z)^{1+eps} on (0, z*], z* = e^{a-1-eps},
    // continued with the flat value w(z*) above z*.
    static Modulus catalog(double a, double eps);

    // Affine in r between knots (log_r descending, values given as logs).
    // Below the deepest knot the curve continues as w(r_deep)/w_ref scaled
    // copy of `tail`, so Osgood integrals stay finite when tail is non-Osgood.
    static Modulus piecewise_affine(std::vector<double> knot_log_r,
                                    std::vector<double> knot_log_w,
                                    std::shared_ptr<const Modulus> tail,
                                    double tail_scale_log);

    // Interpolated linearly in (ln r, ln w); rows must have strictly
    // decreasing ln r. Concavity is validated at load (1e-12 slack).
    static Modulus tabulated(std::vector<double> knot_log_r, std::vector<double> knot_log_w);

    Kind kind() const { return kind_; }
    double catalog_a() const { return a_; }
    double catalog_eps() const { return eps_; }

    /// ln w(e^{log_r}).
    double log_eval(double log_r) const;
    /// ln( w(r)/r ), stable for arbitrarily large |log_r| where the direct
    /// difference of log_eval and log_r would cancel.
    double log_ratio(double log_r) const;
    /// w(e^{log_r}); underflows to 0 gracefully.
    double eval_log(double log_r) const { return std::exp(log_eval(log_r)); }
    double operator()(double r) const { return eval_log(std::log(r)); }

    /// ln of the largest length the modulus is defined for.
    double domain_max_log() const { return domain_max_log_; }

    bool non_osgood() const { return non_osgood_; }

    /// Integral of 1/w over [e^{log_a}, e^{log_b}]; log_a may be -inf when the
    /// modulus is non-Osgood (otherwise raises divergence_error).
    double osgood_integral(double log_a, double log_b) const;
    /// Om(e^{log_b}) = integral from 0.
    double osgood_total(double log_b) const {
        return osgood_integral(-std::numeric_limits<double>::infinity(), log_b);
    }
    /// log-length lam with Om(e^lam) = y.
    double inverse_osgood(double y) const;

    /// Independent quadrature route (adaptive Simpson in lam, integrand
    /// exp(lam - ln w)). Used as the cross-check against closed forms.
    double osgood_quadrature(double log_a, double log_b, double rel_tol = 1e-10) const;

    const std::vector<double>& knot_log_r() const { return klam_; }
    const std::vector<double>& knot_log_w() const { return klw_; }

    Modulus() = default;  // degenerate until assigned from a factory

private:
    void build_pw_tables();
    int find_piece(double log_r) const;
    double rel_integral(double lam) const;

    Kind kind_ = Kind::Catalog;
    double a_ = 0.0, eps_ = 0.0;
    double domain_max_log_ = 0.0;
    bool non_osgood_ = true;

    // knot data (PiecewiseAffine, Tabulated); descending klam_
    std::vector<double> klam_, klw_;
    std::vector<double> ls_;          // per-piece log slope (affine kind)
    std::vector<double> inc_;         // per-piece integral of 1/w
    std::vector<double> om_at_knot_;  // Om(r_j) for each knot
    double om_tail_ = 0.0;            // Om(r_deepest)
    std::shared_ptr<const Modulus> tail_;
    double tail_scale_log_ = 0.0;
};

/// Output of the auxiliary-modulus construction.
struct AuxiliaryBuild {
    Modulus aux;                 // piecewise-affine, knots (r_n, w(r_n)/a_n)
    std::vector<double> log_r;   // knot log radii, n = 1..depth
    std::vector<double> a;       // the recursive sequence, a[0] = 1
    std::vector<double> log_b;   // ln b_n = ln(2^n (r_n - r_{n+1}))
    bool truncated = false;      // depth hit the machine log range
    double certificate_sum = 0;  // partial sum of b_n a_{n+1}
};

/// Builds the slower auxiliary modulus from a non-Osgood one: knot radii
/// solve w(r_n) = 2^{-n+1} w(1), knot values are w(r_n)/a_n with a_n from the
/// recursive minimum over the ratio bound and a tail-threshold ceiling.
AuxiliaryBuild build_auxiliary(const Modulus& m, int depth);

/// (w, wt, W): W(r) = inf_{s in (0,r]} w(s)/wt(s).
class ModulusPair {
public:
    ModulusPair(Modulus omega, Modulus omega_tilde);

    const Modulus& omega() const { return omega_; }
    const Modulus& omega_tilde() const { return tilde_; }

    double weight(double log_r) const;

    /// Search floor for the sampled minimization (log domain).
    static constexpr double kSearchFloorLog = -1e6;

private:
    Modulus omega_, tilde_;
    bool monotone_ratio_ = false;  // inf attained at s = r
};

}  // namespace nonosgood::moc
