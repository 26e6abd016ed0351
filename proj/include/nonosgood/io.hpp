#pragma once

#include <map>
#include <string>
#include <vector>

#include "nonosgood/fixpoint.hpp"
#include "nonosgood/moc.hpp"
#include "nonosgood/traj_field.hpp"

#include "json.hpp"

namespace nonosgood::io {

struct RunConfig {
    std::string modulus_spec = "catalog(a=2, eps=1)";
    std::string aux_spec = "catalog(a=2, eps=0.5)";
    int d = 2;
    int n_max = 8;
    int depth = 4;
    int levels = 8;
    uint64_t seed = 12345;
    std::string out_dir = "out";
    std::vector<double> times;
    int frame_res = 256;
    double rk_tol = 1e-10;

    // thresholds (config-owned, not baked into checks)
    double thr_div = 1e-3;
    double thr_traj = 1e-4;        // x ell_n
    double thr_center = 1e-8;      // x velocity scale
    double thr_contraction = 0.6;
    double thr_ce_lin = 1e-6;
    double thr_ce_quad = 1e-4;
    double thr_l1 = 1e-10;
    double thr_roundtrip = 1e-12;
    double thr_quad_closed = 1e-8;
    int traj_generations = 4;
    double runtime_budget_s = 60.0;
    int aux_depth = 20;

    nlohmann::ordered_json to_json() const;
    /// Enforces positivity and range invariants; throws construction_error.
    void validate() const;
};

RunConfig load_config(const std::string& path);
/// key=value override, same grammar as the file lines.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

moc::Modulus parse_modulus(const std::string& spec);
/// Builds the auxiliary modulus; `derived(depth=N)` constructs it from `base`.
moc::Modulus parse_aux(const std::string& spec, const moc::Modulus& base);
moc::ModulusPair make_pair(const RunConfig& cfg);

moc::Modulus load_modulus_csv(const std::string& path);

void write_text(const std::string& path, const std::string& content);
void write_pgm(const std::string& path, int width, int height,
               const std::vector<uint8_t>& pixels);

struct Raster {
    int res = 0;
    std::vector<uint8_t> pixels;
    bool skipped = false;
    std::string reason;
};
/// Rasterizes a snapshot over Q; pixel = round(255 * density / max density).
Raster raster_density(const fixp::DensitySnapshot& snap, int res);

std::string trajectory_csv(const traj::Trajectory& t, int d);
nlohmann::ordered_json snapshot_json(const fixp::DensitySnapshot& snap);

}  // namespace nonosgood::io
