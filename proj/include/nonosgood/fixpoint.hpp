#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nonosgood/bblock.hpp"
#include "nonosgood/common.hpp"
#include "nonosgood/geometry.hpp"
#include "nonosgood/moc.hpp"

#include "json.hpp"

namespace nonosgood::fixp {

struct Certificate {
    std::string name;
    double k = 0, m = 0;
    double lhs = 0, rhs = 0;
    double margin = 0;
    bool pass = true;
};

struct LevelStats {
    double L = 0;      // -ln ell_k; +inf marks the saturated horizon
    double eta = 0;    // eta_k (unused at k = 0)
    double W = 0;      // W(ell_k)
    double om_quarter = 0;  // Omega(ell_k / 4)
    std::vector<double> N;  // N_m, m = 1..M (N[0] = 1); stored as doubles
    double sum_terms = 0;   // explicit sum of Omega terms
    double tail_bound = 0;  // certified bound on the unenumerated tail
    std::vector<double> bar_tau, tau;
    double T = 0;                    // T^k over the explicit horizon
    double tau_tail_bound = 0;       // certified bound on dropped 2*bar_tau
    std::vector<double> block_start;  // size M+1, prefix sums of 2 tau_m
    int M = 0;
};

/// All section-4 parameters for one modulus pair: lengths (log domain),
/// batch indices, normalized time grids and the machine-checked certificates.
class ParamTable {
public:
    ParamTable(moc::ModulusPair pair, int d, int levels_requested);

    const moc::ModulusPair& pair() const { return pair_; }
    int dim() const { return d_; }
    int levels() const { return static_cast<int>(lv_.size()); }
    const LevelStats& level(int k) const { return lv_[static_cast<size_t>(k)]; }
    bool saturated() const { return saturated_; }
    int levels_requested() const { return levels_requested_; }

    double log_len(int j) const;  // ln ell_j, -inf beyond horizon
    /// Omega(ell_k 2^{-c}); c may be fractional (huge N indices).
    double omt(int k, double c) const;
    /// Omega at an absolute log-length; 0 below any representable scale.
    double om_abs(double lam) const;
    /// log_len indexed by a double (huge indices land beyond the horizon).
    double log_len_d(double j) const;

    // normalized per-level time grid (block m, generation n)
    double that_s(int k, int m, double n) const;
    double that_f(int k, int m, double n) const;
    double t_s(int k, int m, double n) const;
    double t_f(int k, int m, double n) const;
    /// Block m (1-based) containing t; 0 if t falls past the explicit blocks.
    int block_of(int k, double t) const;
    /// Block holding generation n, i.e. m with N_m < n <= N_{m+1}.
    int block_of_generation(int k, double n) const;

    double radius(int k, double n, double t) const;      // r_n^k(t)
    double radius_log(int k, double n, double t) const;  // ln r_n^k(t)
    double radius_rate(int k, double n, double t) const;

    Vec center(int k, const geometry::SymbolString& sigma, double t) const;
    Vec center_rate(int k, const geometry::SymbolString& sigma, double t) const;

    const std::vector<Certificate>& certificates() const { return certs_; }
    bool all_certificates_pass() const;

    nlohmann::ordered_json to_json() const;

private:
    void build_level_lengths(int levels_requested);
    void build_level_tables();
    void build_certificates();
    std::vector<double> choose_N(int k) const;
    double tau_lower_bound(int j, int m, double Lk) const;

    moc::ModulusPair pair_;
    int d_;
    int levels_requested_;
    bool saturated_ = false;
    std::vector<LevelStats> lv_;
    std::vector<Certificate> certs_;
};

/// Structural re-check of an emitted params.json (used on possibly tampered
/// files); returns human-readable failures, empty when consistent.
std::vector<std::string> validate_params_json(const nlohmann::ordered_json& j);

struct FieldEvalInfo {
    bool beyond_horizon = false;
    bool depth_exhausted = false;
    bool below_resolution = false;
};

/// Depth-budgeted evaluation of the fixed-point velocity family.
Vec field_B(const ParamTable& tbl, int k, double t, const Vec& x, int depth,
            FieldEvalInfo* info = nullptr);

struct CubeEntry {
    Vec center;
    double log_side;  // ln side (can be far below double underflow)
    double log_mass;  // ln of the cube's total mass
};

struct DensitySnapshot {
    int d = 2;
    int k = 0;
    double t = 0;
    bool approximated = false;  // depth-exhausted endpoint fallback
    std::vector<CubeEntry> cubes;
    double mass() const;
    /// L1 distance to the uniform unit density on ell_k Q (log domain safe).
    double l1_distance_to_uniform(double log_len_k) const;
};

DensitySnapshot density_Theta(const ParamTable& tbl, int k, double t, int depth,
                              size_t max_cubes = size_t(1) << 16);

/// The exhibited pair after time reversal: mu(t) = Theta^0_{1-t},
/// v(t,x) = -B^0_{1-t}(x).
struct FinalPair {
    const ParamTable* tbl;
    int depth;
    Vec velocity(double t, const Vec& x) const;
    DensitySnapshot density(double t, size_t max_cubes = size_t(1) << 16) const;
};
FinalPair final_pair(const ParamTable& tbl, int depth);

/// Weak-form continuity-equation residual on [t0, t1] (must lie inside a
/// rigid-translation regime at evaluation depth). phi_mean integrates phi
/// exactly over an axis-aligned cube (center, side).
struct CeCheckResult {
    double residual = 0;      // max over sampled times, normalized
    double residual_raw = 0;  // before normalization
    double sup_b = 0;
    bool degenerate = false;  // sub-resolution motion: sup_b == 0
};
CeCheckResult ce_check(const ParamTable& tbl, int k, double t0, double t1, int depth,
                       const std::function<double(const Vec&, double)>& phi_mean,
                       const std::function<Vec(const Vec&)>& grad_phi, double grad_phi_sup,
                       double dt, int n_times);

/// CE residuals on a translation half via the sign-product structure of the
/// cube union: moments of 1, sum x_i and |x|^2 close over sum_j r_j^2, so no
/// cube enumeration is needed. Returns {constant, linear, quadratic}.
struct CeMomentResult {
    double residual_const = 0, residual_linear = 0, residual_quad = 0;
    double sup_b = 0;
    bool degenerate = false;
};
CeMomentResult ce_check_translation_moments(const ParamTable& tbl, int k, double t0, double t1,
                                            double dt, int n_times);

}  // namespace nonosgood::fixp
