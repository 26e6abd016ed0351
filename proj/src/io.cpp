#include "nonosgood/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace nonosgood::io {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::map<std::string, std::string> parse_args(const std::string& inside) {
    std::map<std::string, std::string> out;
    std::stringstream ss(inside);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) {
            out[""] = trim(item);
            continue;
        }
        out[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
    }
    return out;
}

std::vector<double> parse_times(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

}  // namespace

nlohmann::ordered_json RunConfig::to_json() const {
    nlohmann::ordered_json j;
    j["modulus"] = modulus_spec;
    j["aux"] = aux_spec;
    j["d"] = d;
    j["nmax"] = n_max;
    j["depth"] = depth;
    j["levels"] = levels;
    j["seed"] = seed;
    j["frame_res"] = frame_res;
    j["rk_tol"] = rk_tol;
    j["thr_div"] = thr_div;
    j["thr_traj"] = thr_traj;
    j["thr_center"] = thr_center;
    j["thr_contraction"] = thr_contraction;
    j["thr_ce_lin"] = thr_ce_lin;
    j["thr_ce_quad"] = thr_ce_quad;
    j["thr_l1"] = thr_l1;
    j["thr_roundtrip"] = thr_roundtrip;
    j["thr_quad_closed"] = thr_quad_closed;
    j["traj_generations"] = traj_generations;
    j["aux_depth"] = aux_depth;
    return j;
}

void RunConfig::validate() const {
    if (d < 2 || d > kMaxDim) throw construction_error("config: d must be in [2, 8]");
    if (n_max < 2) throw construction_error("config: nmax must be at least 2");
    if (depth < 0) throw construction_error("config: depth must be non-negative");
    if (levels < 1) throw construction_error("config: levels must be positive");
    if (frame_res < 1) throw construction_error("config: frame_res must be positive");
    if (!(rk_tol > 0.0)) throw construction_error("config: rk_tol must be positive");
    if (traj_generations < 1) throw construction_error("config: traj_generations must be positive");
    if (aux_depth < 2) throw construction_error("config: aux_depth must be at least 2");
    for (double thr : {thr_div, thr_traj, thr_center, thr_contraction, thr_ce_lin, thr_ce_quad,
                       thr_l1, thr_roundtrip, thr_quad_closed})
        if (!(thr >= 0.0)) throw construction_error("config: thresholds must be non-negative");
    for (double t : times)
        if (t < 0.0) throw construction_error("config: times must be non-negative");
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "modulus")
        cfg.modulus_spec = value;
    else if (key == "aux")
        cfg.aux_spec = value;
    else if (key == "d")
        cfg.d = std::stoi(value);
    else if (key == "nmax")
        cfg.n_max = std::stoi(value);
    else if (key == "depth")
        cfg.depth = std::stoi(value);
    else if (key == "levels")
        cfg.levels = std::stoi(value);
    else if (key == "seed")
        cfg.seed = std::stoull(value);
    else if (key == "out")
        cfg.out_dir = value;
    else if (key == "times")
        cfg.times = parse_times(value);
    else if (key == "frame_res")
        cfg.frame_res = std::stoi(value);
    else if (key == "rk_tol")
        cfg.rk_tol = std::stod(value);
    else if (key == "thr_div")
        cfg.thr_div = std::stod(value);
    else if (key == "thr_traj")
        cfg.thr_traj = std::stod(value);
    else if (key == "thr_center")
        cfg.thr_center = std::stod(value);
    else if (key == "thr_contraction")
        cfg.thr_contraction = std::stod(value);
    else if (key == "thr_ce_lin")
        cfg.thr_ce_lin = std::stod(value);
    else if (key == "thr_ce_quad")
        cfg.thr_ce_quad = std::stod(value);
    else if (key == "thr_l1")
        cfg.thr_l1 = std::stod(value);
    else if (key == "thr_roundtrip")
        cfg.thr_roundtrip = std::stod(value);
    else if (key == "thr_quad_closed")
        cfg.thr_quad_closed = std::stod(value);
    else if (key == "traj_generations")
        cfg.traj_generations = std::stoi(value);
    else if (key == "runtime_budget_s")
        cfg.runtime_budget_s = std::stod(value);
    else if (key == "aux_depth")
        cfg.aux_depth = std::stoi(value);
    else
        throw construction_error("unknown config key: " + key);
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    std::ifstream in(path);
    if (!in) throw construction_error("cannot open config file: " + path);
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw construction_error("bad config line: " + line);
        apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

moc::Modulus parse_modulus(const std::string& spec) {
    auto open = spec.find('(');
    auto close = spec.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw construction_error("bad modulus spec: " + spec);
    std::string kind = trim(spec.substr(0, open));
    auto args = parse_args(spec.substr(open + 1, close - open - 1));
    if (kind == "catalog") {
        return moc::Modulus::catalog(std::stod(args.at("a")), std::stod(args.at("eps")));
    }
    if (kind == "table") {
        std::string path = args.count("") ? args.at("") : args.at("path");
        if (path.size() >= 2 && path.front() == '"') path = path.substr(1, path.size() - 2);
        return load_modulus_csv(path);
    }
    throw construction_error("unknown modulus kind: " + kind);
}

moc::Modulus parse_aux(const std::string& spec, const moc::Modulus& base) {
    auto open = spec.find('(');
    std::string kind = open == std::string::npos ? spec : trim(spec.substr(0, open));
    if (kind == "derived") {
        auto close = spec.rfind(')');
        auto args = parse_args(spec.substr(open + 1, close - open - 1));
        int depth = args.count("depth") ? std::stoi(args.at("depth")) : 40;
        return moc::build_auxiliary(base, depth).aux;
    }
    return parse_modulus(spec);
}

moc::ModulusPair make_pair(const RunConfig& cfg) {
    moc::Modulus omega = parse_modulus(cfg.modulus_spec);
    moc::Modulus aux = parse_aux(cfg.aux_spec, omega);
    return moc::ModulusPair(std::move(omega), std::move(aux));
}

moc::Modulus load_modulus_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw construction_error("cannot open modulus table: " + path);
    std::vector<double> lam, lw;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw construction_error("modulus table needs two columns: " + line);
        double lr = std::stod(line.substr(0, comma));
        double w = std::stod(line.substr(comma + 1));
        if (!(w > 0.0)) throw construction_error("modulus table values must be positive");
        lam.push_back(lr);
        lw.push_back(std::log(w));
    }
    return moc::Modulus::tabulated(std::move(lam), std::move(lw));
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw construction_error("cannot write file: " + path);
    out << content;
}

void write_pgm(const std::string& path, int width, int height,
               const std::vector<uint8_t>& pixels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw construction_error("cannot write file: " + path);
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
}

Raster raster_density(const fixp::DensitySnapshot& snap, int res) {
    Raster r;
    r.res = res;
    if (snap.d != 2) {
        r.skipped = true;
        r.reason = "raster output is 2-d only";
        return r;
    }
    double cell = 1.0 / res;
    for (const auto& c : snap.cubes)
        if (std::exp(c.log_side) < cell) {
            r.skipped = true;
            r.reason = "cube side below one pixel";
            return r;
        }
    std::vector<double> acc(static_cast<size_t>(res) * res, 0.0);
    for (const auto& c : snap.cubes) {
        double side = std::exp(c.log_side);
        double mass = std::exp(c.log_mass);
        double x0 = c.center[0] - 0.5 * side, x1 = c.center[0] + 0.5 * side;
        double y0 = c.center[1] - 0.5 * side, y1 = c.center[1] + 0.5 * side;
        int i0 = std::max(0, static_cast<int>(std::floor((x0 + 0.5) * res)));
        int i1 = std::min(res - 1, static_cast<int>(std::floor((x1 + 0.5) * res - 1e-12)));
        int j0 = std::max(0, static_cast<int>(std::floor((y0 + 0.5) * res)));
        int j1 = std::min(res - 1, static_cast<int>(std::floor((y1 + 0.5) * res - 1e-12)));
        double dens = mass / (side * side);
        for (int j = j0; j <= j1; ++j) {
            double cy0 = -0.5 + j * cell, cy1 = cy0 + cell;
            double oy = std::min(y1, cy1) - std::max(y0, cy0);
            if (oy <= 0) continue;
            for (int i = i0; i <= i1; ++i) {
                double cx0 = -0.5 + i * cell, cx1 = cx0 + cell;
                double ox = std::min(x1, cx1) - std::max(x0, cx0);
                if (ox <= 0) continue;
                acc[static_cast<size_t>(j) * res + i] += dens * ox * oy / (cell * cell);
            }
        }
    }
    double peak = 0.0;
    for (double v : acc) peak = std::max(peak, v);
    r.pixels.resize(acc.size(), 0);
    if (peak > 0.0)
        for (size_t i = 0; i < acc.size(); ++i) {
            // row-major, top-left origin: flip the y index
            size_t row = i / static_cast<size_t>(res), col = i % static_cast<size_t>(res);
            size_t dst = (static_cast<size_t>(res) - 1 - row) * res + col;
            double v = std::round(255.0 * acc[i] / peak);
            r.pixels[dst] = static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    return r;
}

std::string trajectory_csv(const traj::Trajectory& t, int d) {
    std::ostringstream out;
    out.precision(17);
    out << "t";
    for (int i = 1; i <= d; ++i) out << ",x_" << i;
    out << "\n";
    for (size_t s = 0; s < t.times.size(); ++s) {
        out << t.times[s];
        for (int i = 0; i < d; ++i) out << "," << t.points[s][i];
        out << "\n";
    }
    return out.str();
}

nlohmann::ordered_json snapshot_json(const fixp::DensitySnapshot& snap) {
    nlohmann::ordered_json j;
    j["format_version"] = 1;
    j["k"] = snap.k;
    j["t"] = snap.t;
    j["approximated"] = snap.approximated;
    j["mass"] = snap.mass();
    auto cubes = nlohmann::ordered_json::array();
    for (const auto& c : snap.cubes) {
        nlohmann::ordered_json e;
        auto center = nlohmann::ordered_json::array();
        for (int i = 0; i < snap.d; ++i) center.push_back(c.center[i]);
        e["center"] = std::move(center);
        e["log_side"] = c.log_side;
        e["side"] = std::exp(c.log_side);
        e["log_mass"] = c.log_mass;
        e["mass"] = std::exp(c.log_mass);
        cubes.push_back(std::move(e));
    }
    j["cubes"] = std::move(cubes);
    return j;
}

}  // namespace nonosgood::io
