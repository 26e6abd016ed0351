#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "nonosgood/acceptance.hpp"
#include "nonosgood/fixpoint.hpp"
#include "nonosgood/geometry.hpp"
#include "nonosgood/io.hpp"
#include "nonosgood/traj_field.hpp"

namespace fs = std::filesystem;
using namespace nonosgood;

namespace {

struct Common {
    std::string config_path;
    std::string out_dir;
    long seed = -1;
    int depth = -1;
    int nmax = -1;
    std::string times;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_path, "flat key=value config file");
    app->add_option("--out", c.out_dir, "output directory");
    app->add_option("--seed", c.seed, "RNG seed override");
    app->add_option("--depth", c.depth, "fixed-point unrolling depth");
    app->add_option("--nmax", c.nmax, "trajectory-field truncation generation");
    app->add_option("--times", c.times, "comma-separated evaluation times");
}

io::RunConfig resolve(const Common& c) {
    io::RunConfig cfg;
    if (!c.config_path.empty()) cfg = io::load_config(c.config_path);
    if (!c.out_dir.empty()) cfg.out_dir = c.out_dir;
    if (c.seed >= 0) cfg.seed = static_cast<uint64_t>(c.seed);
    if (c.depth >= 0) cfg.depth = c.depth;
    if (c.nmax >= 0) cfg.n_max = c.nmax;
    if (!c.times.empty()) io::apply_override(cfg, "times", c.times);
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    return cfg;
}

int fail_machine_readable(const std::exception& e, const char* stage) {
    nlohmann::ordered_json err;
    err["error"] = {{"stage", stage}, {"what", e.what()}};
    std::cout << err.dump() << "\n";
    return 2;
}

int cmd_build_params(const Common& c) {
    io::RunConfig cfg = resolve(c);
    try {
        moc::ModulusPair pair = io::make_pair(cfg);
        fixp::ParamTable tbl(pair, cfg.d, cfg.levels);
        nlohmann::ordered_json j = tbl.to_json();
        j["config"] = cfg.to_json();
        io::write_text(cfg.out_dir + "/params.json", j.dump(2) + "\n");
        std::cout << "params.json written (" << tbl.levels() << " levels, "
                  << tbl.certificates().size() << " certificates, "
                  << (tbl.all_certificates_pass() ? "all pass" : "FAILURES") << ")\n";
        return tbl.all_certificates_pass() ? 0 : 1;
    } catch (const std::exception& e) {
        return fail_machine_readable(e, "build-params");
    }
}

int cmd_trace(const Common& c, int generations, bool reverse, int from_dyadic) {
    io::RunConfig cfg = resolve(c);
    try {
        moc::ModulusPair pair = io::make_pair(cfg);
        traj::TrajConfig tc;
        tc.d = cfg.d;
        tc.n_max = cfg.n_max;
        traj::TrajField fld(pair, tc);
        geometry::LengthSequence L = geometry::LengthSequence::uniform(1.0, cfg.n_max + 2);
        std::vector<double> brk(fld.grid().t.begin() + 1, fld.grid().t.end());
        // requested sample times land on step boundaries so they show in CSV
        for (double ts : cfg.times) brk.push_back(ts);
        nlohmann::ordered_json manifest;
        manifest["format_version"] = 1;
        auto entries = nlohmann::ordered_json::array();
        double worst = 0.0;
        auto vj = [&](const Vec& v) {
            auto a = nlohmann::ordered_json::array();
            for (int i = 0; i < cfg.d; ++i) a.push_back(v[i]);
            return a;
        };
        auto run_one = [&](const geometry::SymbolString& sigma, int n) {
            Vec start, target;
            traj::Trajectory tr;
            double horizon;
            nlohmann::ordered_json e;
            e["sigma"] = sigma.to_string();
            e["generation"] = n;
            try {
                if (!reverse) {
                    start = geometry::cantor_center(L, sigma);
                    target = geometry::dyadic_center(sigma);
                    horizon = fld.grid().t[n];
                    tr = traj::integrate(fld.field(), start, 0.0, horizon, cfg.rk_tol, brk,
                                         1.0 / 16, true);
                } else {
                    start = geometry::dyadic_center(sigma);
                    target = geometry::cantor_center(L, sigma);
                    horizon = fld.T();
                    std::vector<double> rbrk;
                    for (double b : brk) rbrk.push_back(fld.T() - b);
                    tr = traj::integrate(fld.reversed_field(), start, 0.0, horizon, cfg.rk_tol,
                                         rbrk, 1.0 / 16, true);
                }
            } catch (const stiffness_error& se) {
                e["failure"] = se.what();
                entries.push_back(std::move(e));
                return;  // keep going with the remaining batch
            }
            double err = (tr.end - target).norm2();
            worst = std::max(worst, err / std::exp(L.log_len(n)));
            std::string name = cfg.out_dir + "/traj_" + std::to_string(n) + "_" +
                               std::to_string(entries.size()) + ".csv";
            io::write_text(name, io::trajectory_csv(tr, cfg.d));
            e["start"] = vj(start);
            e["end"] = vj(tr.end);
            e["target"] = vj(target);
            e["error"] = err;
            e["file"] = name;
            entries.push_back(std::move(e));
        };
        if (reverse && from_dyadic > 0) {
            for (auto& sigma : geometry::SymbolString::all(cfg.d, from_dyadic))
                run_one(sigma, from_dyadic);
        } else {
            for (int n = 1; n <= generations; ++n)
                for (auto& sigma : geometry::SymbolString::all(cfg.d, n)) run_one(sigma, n);
        }
        manifest["trajectories"] = std::move(entries);
        manifest["max_relative_endpoint_error"] = worst;
        io::write_text(cfg.out_dir + "/manifest.json", manifest.dump(2) + "\n");
        std::cout << "traced " << manifest["trajectories"].size()
                  << " trajectories, max relative endpoint error " << worst << "\n";
        return 0;
    } catch (const std::exception& e) {
        return fail_machine_readable(e, "trace");
    }
}

std::string format_time_tag(double t) {
    std::ostringstream ss;
    ss << t;
    std::string s = ss.str();
    for (auto& ch : s)
        if (ch == '.') ch = 'p';
    return s;
}

int cmd_density(const Common& c) {
    io::RunConfig cfg = resolve(c);
    try {
        moc::ModulusPair pair = io::make_pair(cfg);
        fixp::ParamTable tbl(pair, cfg.d, cfg.levels);
        std::vector<double> times = cfg.times.empty() ? std::vector<double>{0.0, 0.5, 1.0}
                                                      : cfg.times;
        for (double t : times) {
            std::string tag = format_time_tag(t);
            try {
                auto snap = fixp::density_Theta(tbl, 0, t, cfg.depth);
                auto j = io::snapshot_json(snap);
                io::Raster raster = io::raster_density(snap, cfg.frame_res);
                j["raster_skipped"] = raster.skipped;
                if (raster.skipped) j["raster_skip_reason"] = raster.reason;
                io::write_text(cfg.out_dir + "/density_t" + tag + ".json", j.dump(2) + "\n");
                if (!raster.skipped)
                    io::write_pgm(cfg.out_dir + "/frame_t" + tag + ".pgm", raster.res,
                                  raster.res, raster.pixels);
                std::cout << "t=" << t << ": " << snap.cubes.size() << " cubes, mass "
                          << snap.mass() << (raster.skipped ? " (raster skipped)" : "") << "\n";
            } catch (const resolution_error& re) {
                nlohmann::ordered_json j;
                j["format_version"] = 1;
                j["t"] = t;
                j["error"] = re.what();
                io::write_text(cfg.out_dir + "/density_t" + tag + ".json", j.dump(2) + "\n");
                std::cout << "t=" << t << ": unresolvable (" << re.what() << ")\n";
            }
        }
        return 0;
    } catch (const std::exception& e) {
        return fail_machine_readable(e, "density");
    }
}

int cmd_verify(const Common& c) {
    io::RunConfig cfg = resolve(c);
    try {
        // re-validate an existing params.json first (tamper check)
        fs::path pj = fs::path(cfg.out_dir) / "params.json";
        if (fs::exists(pj)) {
            std::ifstream in(pj);
            nlohmann::ordered_json j = nlohmann::ordered_json::parse(in);
            auto fails = fixp::validate_params_json(j);
            for (const auto& f : fails) {
                verify::CheckReport r;
                r.name = "params.json invariant";
                r.provenance = "fixpoint.validate_params_json";
                r.pass = false;
                r.note = f;
                std::cout << r.to_json().dump() << "\n";
            }
            if (!fails.empty()) {
                std::cerr << "stored parameter table violates invariants\n";
                return 1;
            }
        }
        std::ofstream jsonl(fs::path(cfg.out_dir) / "reports.jsonl");
        auto reports = accept::run_all(cfg, &jsonl);
        for (const auto& r : reports) std::cout << r.to_json().dump() << "\n";
        return accept::summarize(reports, std::cerr);
    } catch (const std::exception& e) {
        return fail_machine_readable(e, "verify");
    }
}

int cmd_render_field(const Common& c, double t, int res) {
    io::RunConfig cfg = resolve(c);
    try {
        moc::ModulusPair pair = io::make_pair(cfg);
        traj::TrajConfig tc;
        tc.d = cfg.d;
        tc.n_max = cfg.n_max;
        traj::TrajField fld(pair, tc);
        std::ostringstream out;
        out.precision(17);
        out << "x,y,bx,by\n";
        for (int j = 0; j < res; ++j)
            for (int i = 0; i < res; ++i) {
                Vec x(cfg.d);
                x[0] = -0.5 + (i + 0.5) / res;
                x[1] = -0.5 + (j + 0.5) / res;
                Vec b = fld.eval(t, x);
                out << x[0] << "," << x[1] << "," << b[0] << "," << b[1] << "\n";
            }
        io::write_text(cfg.out_dir + "/field_t" + format_time_tag(t) + ".csv", out.str());
        std::cout << "field grid written (" << res << "x" << res << ")\n";
        return 0;
    } catch (const std::exception& e) {
        return fail_machine_readable(e, "render-field");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonosgood: divergence-free flows with prescribed non-Osgood moduli"};
    app.require_subcommand(1);
    Common c;

    auto* sp = app.add_subcommand("build-params", "build and certify the parameter table");
    add_common(sp, c);

    auto* st = app.add_subcommand("trace", "integrate Cantor-to-dyadic trajectories");
    add_common(st, c);
    int generations = 3;
    bool reverse = false;
    int from_dyadic = 0;
    st->add_option("--generations", generations, "trace all symbols up to this generation");
    st->add_flag("--reverse", reverse, "integrate the time-reversed field");
    st->add_option("--from-dyadic", from_dyadic, "reverse tracing from dyadic centers of this generation");

    auto* sd = app.add_subcommand("density", "emit density snapshots (cube lists and frames)");
    add_common(sd, c);

    auto* sv = app.add_subcommand("verify", "run the full verification suite");
    add_common(sv, c);

    auto* sr = app.add_subcommand("render-field", "quiver CSV of the trajectory field");
    add_common(sr, c);
    double rt = 0.05;
    int rres = 64;
    sr->add_option("--time", rt, "evaluation time");
    sr->add_option("--res", rres, "grid resolution");

    CLI11_PARSE(app, argc, argv);

    if (sp->parsed()) return cmd_build_params(c);
    if (st->parsed()) return cmd_trace(c, generations, reverse, from_dyadic);
    if (sd->parsed()) return cmd_density(c);
    if (sv->parsed()) return cmd_verify(c);
    if (sr->parsed()) return cmd_render_field(c, rt, rres);
    return 1;
}
