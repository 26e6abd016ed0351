#include "nonosgood/verify.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace nonosgood::verify {

nlohmann::ordered_json CheckReport::to_json() const {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["provenance"] = provenance;
    j["samples"] = samples;
    j["statistic"] = statistic;
    j["threshold"] = threshold;
    j["pass"] = pass;
    j["degenerate"] = degenerate;
    j["seed"] = seed;
    if (!note.empty()) j["note"] = note;
    return j;
}

void parallel_for(long n, const std::function<void(long, long)>& chunk_fn) {
    int nt = std::min<long>(thread_budget(), std::max<long>(1, n / 256));
    if (nt <= 1) {
        chunk_fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    long chunk = (n + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
        long lo = t * chunk, hi = std::min<long>(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(chunk_fn, lo, hi);
    }
    for (auto& th : pool) th.join();
}

CheckReport divergence_residual(const traj::FieldFn& f, int d, double t, long n_samples, double h,
                                const Vec& lo, const Vec& hi, double threshold, uint64_t seed,
                                const std::string& name, const std::string& provenance) {
    std::vector<double> div_w(static_cast<size_t>(thread_budget()) + 1, 0.0);
    std::vector<double> grad_w(div_w.size(), 0.0);
    std::atomic<int> widx{0};
    parallel_for(n_samples, [&](long a, long b) {
        int slot = widx++;
        double worst_div = 0.0, worst_grad = 0.0;
        for (long s = a; s < b; ++s) {
            Rng rng = Rng::stream(seed, 0x5d1, static_cast<uint64_t>(s));
            Vec x(d);
            for (int i = 0; i < d; ++i) x[i] = rng.uniform(lo[i], hi[i]);
            double div = 0.0;
            for (int i = 0; i < d; ++i) {
                Vec xp = x, xm = x;
                xp[i] += h;
                xm[i] -= h;
                Vec fp = f(t, xp), fm = f(t, xm);
                div += (fp[i] - fm[i]) / (2.0 * h);
                for (int q = 0; q < d; ++q)
                    worst_grad = std::max(worst_grad, std::fabs(fp[q] - fm[q]) / (2.0 * h));
            }
            worst_div = std::max(worst_div, std::fabs(div));
        }
        div_w[static_cast<size_t>(slot)] = worst_div;
        grad_w[static_cast<size_t>(slot)] = worst_grad;
    });
    double worst_div = 0.0, worst_grad = 0.0;
    for (double v : div_w) worst_div = std::max(worst_div, v);
    for (double v : grad_w) worst_grad = std::max(worst_grad, v);
    CheckReport rep;
    rep.name = name;
    rep.provenance = provenance;
    rep.samples = n_samples;
    rep.seed = seed;
    rep.threshold = threshold;
    rep.degenerate = worst_grad == 0.0;
    rep.statistic = rep.degenerate ? worst_div : worst_div / worst_grad;
    rep.pass = rep.statistic <= threshold;
    return rep;
}

double seminorm_sample(const traj::FieldFn& f, int d, double t, const moc::Modulus& omega,
                       long n_pairs, const Vec& lo, const Vec& hi, uint64_t seed, int q_min,
                       int q_max) {
    double worst = 0.0;
    for (long s = 0; s < n_pairs; ++s) {
        Rng rng = Rng::stream(seed, 0x5e3, static_cast<uint64_t>(s));
        Vec x(d);
        for (int i = 0; i < d; ++i) x[i] = rng.uniform(lo[i], hi[i]);
        int q = q_min + rng.uniform_int(q_max - q_min + 1);
        double hlen = std::pow(2.0, -q) * rng.uniform(0.5, 1.0);
        int axis = rng.uniform_int(d);
        Vec y = x;
        y[axis] += rng.uniform() < 0.5 ? hlen : -hlen;
        Vec fx = f(t, x), fy = f(t, y);
        double diff = (fx - fy).norm2();
        double wval = omega.eval_log(std::log(hlen));
        if (wval > 0.0) worst = std::max(worst, diff / wval);
    }
    return worst;
}

double interpolation_bound(double sup_u, double lip_u, double r, const moc::Modulus& omega) {
    double w = omega.eval_log(std::log(r));
    double c = std::max(sup_u / w, lip_u * r / w);
    return 2.0 * c;
}

PushforwardResult pushforward_compare(const traj::FieldFn& f, int d,
                                      const fixp::DensitySnapshot& snap0, double t0, double t1,
                                      const fixp::DensitySnapshot& snap1, long n_particles,
                                      double rk_tol, uint64_t seed, double assign_radius,
                                      const std::vector<double>& breakpoints,
                                      const std::string& name) {
    size_t nc0 = snap0.cubes.size(), nc1 = snap1.cubes.size();
    PushforwardResult res;
    res.counts.assign(nc1, 0);
    res.expected.assign(nc1, 0.0);
    double mass0 = snap0.mass();
    for (size_t c = 0; c < nc1; ++c)
        res.expected[c] = std::exp(snap1.cubes[c].log_mass) * n_particles;

    std::vector<long> alloc(nc0, 0);
    long assigned = 0;
    for (size_t c = 0; c < nc0; ++c) {
        alloc[c] = std::lround(std::exp(snap0.cubes[c].log_mass) / mass0 * n_particles);
        assigned += alloc[c];
    }
    if (!alloc.empty()) alloc[0] += n_particles - assigned;

    std::vector<long> counts(nc1, 0);
    std::atomic<long> escapes{0};
    std::vector<std::pair<long, size_t>> jobs;  // particle index -> cube
    jobs.reserve(static_cast<size_t>(n_particles));
    long pid = 0;
    for (size_t c = 0; c < nc0; ++c)
        for (long i = 0; i < alloc[c]; ++i) jobs.emplace_back(pid++, c);

    std::vector<std::vector<long>> counts_w;
    std::atomic<int> widx{0};
    counts_w.resize(static_cast<size_t>(thread_budget()) + 1,
                    std::vector<long>(nc1, 0));
    parallel_for(static_cast<long>(jobs.size()), [&](long a, long b) {
        int slot = widx++;
        auto& local = counts_w[static_cast<size_t>(slot)];
        for (long s = a; s < b; ++s) {
            auto [p, c] = jobs[static_cast<size_t>(s)];
            Rng rng = Rng::stream(seed, 0xfa11, static_cast<uint64_t>(p));
            const auto& cube = snap0.cubes[c];
            double side = std::exp(cube.log_side);
            Vec x = cube.center;
            for (int i = 0; i < d; ++i) x[i] += side * (rng.uniform() - 0.5);
            Vec endp = traj::integrate(f, x, t0, t1, rk_tol, breakpoints).end;
            long best = -1;
            double bestd = 1e300;
            for (size_t cc = 0; cc < nc1; ++cc) {
                double dist = (endp - snap1.cubes[cc].center).norm_inf();
                if (dist < bestd) {
                    bestd = dist;
                    best = static_cast<long>(cc);
                }
            }
            double lim = best < 0 ? 0.0
                                  : std::max(0.5 * std::exp(snap1.cubes[static_cast<size_t>(best)]
                                                                .log_side),
                                             assign_radius);
            if (best < 0 || bestd > lim)
                escapes++;
            else
                local[static_cast<size_t>(best)]++;
        }
    });
    for (const auto& local : counts_w)
        for (size_t cc = 0; cc < nc1; ++cc) counts[cc] += local[cc];

    double worst = 0.0;
    for (size_t cc = 0; cc < nc1; ++cc) {
        double p = res.expected[cc] / n_particles;
        double sigma = std::sqrt(std::max(p * (1.0 - p) / n_particles, 1e-300));
        double dev = std::fabs(counts[cc] - res.expected[cc]) / n_particles;
        worst = std::max(worst, dev / (3.0 * sigma + 1e-12));
    }
    res.counts = counts;
    res.escapes = escapes.load();
    res.report.name = name;
    res.report.provenance = "verify.pushforward_compare";
    res.report.samples = n_particles;
    res.report.seed = seed;
    res.report.threshold = 1.0;  // in units of 3 sigma
    res.report.statistic = worst;
    res.report.pass = worst <= 1.0 && res.escapes == 0;
    if (res.escapes > 0) res.report.note = std::to_string(res.escapes) + " escapes";
    return res;
}

}  // namespace nonosgood::verify
