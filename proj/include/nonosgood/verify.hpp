#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nonosgood/common.hpp"
#include "nonosgood/fixpoint.hpp"
#include "nonosgood/moc.hpp"
#include "nonosgood/traj_field.hpp"

#include "json.hpp"

namespace nonosgood::verify {

struct CheckReport {
    std::string name;
    std::string provenance;  // which module/op was probed
    long samples = 0;
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
    bool degenerate = false;
    uint64_t seed = 0;
    std::string note;

    nlohmann::ordered_json to_json() const;
};

/// Max |central-difference divergence| over samples, normalized by the max
/// finite-difference gradient magnitude seen across the same samples.
CheckReport divergence_residual(const traj::FieldFn& f, int d, double t, long n_samples, double h,
                                const Vec& lo, const Vec& hi, double threshold, uint64_t seed,
                                const std::string& name, const std::string& provenance);

/// Stratified lower-bound sample of [f(t,.)]_{C^omega}: pairs at scales 2^{-q}
/// for q in [q_min, q_max], x uniform in the box.
double seminorm_sample(const traj::FieldFn& f, int d, double t, const moc::Modulus& omega,
                       long n_pairs, const Vec& lo, const Vec& hi, uint64_t seed, int q_min = 1,
                       int q_max = 40);

/// Interpolation bound: if |u| <= C w(r) and |grad u| <= C w(r)/r
/// then [u]_{C^w} <= 2C; returns that 2C for measured sup/lip data.
double interpolation_bound(double sup_u, double lip_u, double r, const moc::Modulus& omega);

struct PushforwardResult {
    CheckReport report;
    std::vector<long> counts;
    std::vector<double> expected;
    long escapes = 0;
};

/// Integrates particles sampled per-cube from snap0 and compares the final
/// per-cube histogram against snap1 within 3-sigma binomial noise.
PushforwardResult pushforward_compare(const traj::FieldFn& f, int d,
                                      const fixp::DensitySnapshot& snap0, double t0, double t1,
                                      const fixp::DensitySnapshot& snap1, long n_particles,
                                      double rk_tol, uint64_t seed, double assign_radius,
                                      const std::vector<double>& breakpoints,
                                      const std::string& name);

/// Chunked parallel loop honoring NONOSGOOD_THREADS.
void parallel_for(long n, const std::function<void(long, long)>& chunk_fn);

}  // namespace nonosgood::verify
