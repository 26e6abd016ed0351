#include "nonosgood/fixpoint.hpp"

#include <algorithm>
#include <cmath>

#include "nonosgood/traj_field.hpp"

namespace nonosgood::fixp {

namespace {
constexpr double kLn2 = 0.6931471805599453;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxBlocks = 40;
constexpr double kNExact = 4.5e15;  // integer exactness limit for N stored as double
}  // namespace

ParamTable::ParamTable(moc::ModulusPair pair, int d, int levels_requested)
    : pair_(std::move(pair)), d_(d), levels_requested_(levels_requested) {
    if (d_ < 2 || d_ > kMaxDim) throw domain_error("param table: bad dimension");
    if (!pair_.omega_tilde().non_osgood())
        throw divergence_error("param table needs a non-Osgood auxiliary modulus");
    build_level_lengths(levels_requested);
    build_level_tables();
    build_certificates();
}

double ParamTable::log_len(int j) const {
    if (j < 0) throw domain_error("negative level");
    if (j >= levels()) return -kInf;
    return -lv_[static_cast<size_t>(j)].L;
}

double ParamTable::omt(int k, double c) const {
    double lam = log_len(k) - c * kLn2;
    if (std::isinf(lam)) return 0.0;
    return pair_.omega_tilde().osgood_total(lam);
}

double ParamTable::om_abs(double lam) const {
    if (std::isinf(lam) && lam < 0) return 0.0;
    return pair_.omega_tilde().osgood_total(lam);
}

double ParamTable::log_len_d(double j) const {
    if (j >= static_cast<double>(levels())) return -kInf;
    return log_len(static_cast<int>(j));
}

std::vector<double> ParamTable::choose_N(int k) const {
    const double om4 = omt(k, 2.0);
    if (!(om4 > 0.0)) throw construction_error("choose_N: level scale not representable");
    std::vector<double> N{1.0};
    double sum = om4;
    const double cap = 2.0 * om4;
    for (int m = 1; m <= kMaxBlocks; ++m) {
        double room = cap - sum;
        if (!(room > 0.0)) throw construction_error("choose_N: interval budget exhausted");
        // first pick may take most of the room; later picks halve both the
        // room and the previous term so the unenumerated tail is certified
        double theta = m == 1 ? room * (1.0 - std::pow(2.0, -4))
                              : std::min(0.49 * room, 0.5 * omt(k, N.back() + 1.0));
        double lam_theta;
        try {
            lam_theta = pair_.omega_tilde().inverse_osgood(theta);
        } catch (const std::exception&) {
            throw construction_error("choose_N: interval cannot be hit by the term sequence");
        }
        double n = std::floor((log_len(k) - lam_theta) / kLn2 - 1.0);
        if (!(n > N.back())) n = N.back() + 1.0;
        if (n < kNExact) {
            while (omt(k, n + 1.0) > theta) n += 1.0;
            while (n - 1.0 > N.back() && omt(k, n) <= theta) n -= 1.0;
        }
        double term = omt(k, n + 1.0);
        sum += term;
        N.push_back(n);
        if (term < 1e-15 * om4 || n > kNExact) break;
    }
    return N;
}

double ParamTable::tau_lower_bound(int j, int m, double Lk) const {
    // conservative: drops the cross-level sum, bounds T^j by 12 Omega(ell_j/4)
    const auto& Nj = lv_[static_cast<size_t>(j)].N;
    double Nm = Nj[static_cast<size_t>(m - 1)];
    double Nm1 = Nj[static_cast<size_t>(m)];
    double om_halfk = std::isinf(Lk) ? 0.0 : pair_.omega_tilde().osgood_total(-Lk - kLn2);
    double middle = omt(j, Nm + 1.0) - om_halfk;
    double third = omt(j, Nm + 2.0) - omt(j, Nm1 + 1.0);
    return (middle + third) / (12.0 * omt(j, 2.0));
}

void ParamTable::build_level_lengths(int levels_requested) {
    LevelStats l0;
    l0.L = 0.0;
    l0.W = pair_.weight(0.0);
    lv_.push_back(l0);
    lv_[0].N = choose_N(0);

    for (int k = 1; k <= levels_requested; ++k) {
        // constraints (j, m) with j + N_m^j == k
        struct Constr {
            int j, m;
            double coeff;  // 4 m (N_{m+1} - N_m) W(ell_j)
        };
        std::vector<Constr> cons;
        for (int j = 0; j < k; ++j) {
            const auto& Nj = lv_[static_cast<size_t>(j)].N;
            for (int m = 1; m + 1 <= static_cast<int>(Nj.size()); ++m) {
                if (Nj[static_cast<size_t>(m - 1)] == static_cast<double>(k - j)) {
                    double gap = Nj[static_cast<size_t>(m)] - Nj[static_cast<size_t>(m - 1)];
                    cons.push_back({j, m, 4.0 * m * gap * lv_[static_cast<size_t>(j)].W});
                }
            }
        }
        double eta = 1.0;
        double Lk = 0.0;
        bool ok = false;
        int steps = 0;
        const Constr* binding = nullptr;
        while (true) {
            Lk = lv_[static_cast<size_t>(k - 1)].L + (1.0 + eta) * kLn2;
            ok = true;
            binding = nullptr;
            for (const auto& c : cons) {
                double rhs = c.coeff / tau_lower_bound(c.j, c.m, Lk);
                double lhs = pair_.weight(-Lk);
                if (!(lhs >= rhs)) {
                    ok = false;
                    binding = &c;
                    break;
                }
            }
            if (ok) break;
            eta *= 2.0;
            ++steps;
            if (std::isinf(eta)) break;  // re-checked in the limit below
            if (steps > 1024) {
                std::string what = "choose_eta: growth error at k=" + std::to_string(k);
                if (binding)
                    what += " (binding constraint j=" + std::to_string(binding->j) +
                            ", m=" + std::to_string(binding->m) + ")";
                throw construction_error(what);
            }
        }
        if (std::isinf(eta)) {
            // the needed eta is not representable; legitimate only when the
            // weight actually diverges, otherwise the constraint is hopeless
            // numeric divergence certificate: the weight must keep growing
            // along a deep dyadic sequence for the limit to make sense
            bool limit_ok = pair_.weight(-1e300) > 2.0 * pair_.weight(-1e200);
            if (!limit_ok) {
                std::string what = "choose_eta: growth error at k=" + std::to_string(k) +
                                   " (weight does not diverge fast enough)";
                throw construction_error(what);
            }
            saturated_ = true;
            break;  // horizon ends; deeper levels carry no representable scale
        }
        LevelStats lk;
        lk.eta = eta;
        lk.L = Lk;
        lk.W = pair_.weight(-Lk);
        lv_.push_back(lk);
        lv_.back().N = choose_N(k);
    }
}

void ParamTable::build_level_tables() {
    for (int k = 0; k < levels(); ++k) {
        LevelStats& lv = lv_[static_cast<size_t>(k)];
        lv.om_quarter = omt(k, 2.0);
        const auto& N = lv.N;
        lv.M = static_cast<int>(N.size()) - 1;
        lv.sum_terms = 0.0;
        for (size_t m = 0; m < N.size(); ++m) lv.sum_terms += omt(k, N[m] + 1.0);
        // the selection policy halves successive terms past the horizon
        lv.tail_bound = std::min(0.98 * (2.0 * lv.om_quarter - lv.sum_terms),
                                 omt(k, N.back() + 1.0));
        lv.bar_tau.resize(static_cast<size_t>(lv.M));
        for (int m = 1; m <= lv.M; ++m) {
            double Nm = N[static_cast<size_t>(m - 1)], Nm1 = N[static_cast<size_t>(m)];
            double first = 0.0;
            for (double n = Nm + 2.0; n <= Nm1 && k + n - 2.0 < levels(); n += 1.0)
                first += om_abs(log_len_d(k + n - 2.0) - 3.0 * kLn2) -
                         om_abs(log_len_d(k + n - 1.0) - kLn2);
            double om_half = om_abs(log_len_d(k + Nm) - kLn2);
            double middle = omt(k, Nm + 1.0) - om_half;
            double third = omt(k, Nm + 2.0) - omt(k, Nm1 + 1.0);
            lv.bar_tau[static_cast<size_t>(m - 1)] = first + middle + third;
        }
        lv.T = 0.0;
        for (double bt : lv.bar_tau) lv.T += 2.0 * bt;
        lv.tau_tail_bound = 6.0 * lv.tail_bound;
        lv.tau.resize(lv.bar_tau.size());
        for (size_t i = 0; i < lv.bar_tau.size(); ++i) lv.tau[i] = lv.bar_tau[i] / lv.T;
        lv.block_start.assign(static_cast<size_t>(lv.M) + 1, 0.0);
        for (int m = 1; m <= lv.M; ++m)
            lv.block_start[static_cast<size_t>(m)] =
                lv.block_start[static_cast<size_t>(m - 1)] + 2.0 * lv.tau[static_cast<size_t>(m - 1)];
    }
}

double ParamTable::that_s(int k, int m, double n) const {
    const LevelStats& lv = lv_[static_cast<size_t>(k)];
    double Nm = lv.N[static_cast<size_t>(m - 1)], Nm1 = lv.N[static_cast<size_t>(m)];
    double w = lv.tau[static_cast<size_t>(m - 1)] / (Nm1 - Nm);
    return lv.block_start[static_cast<size_t>(m - 1)] + (n - 1.0 - Nm) * w;
}

double ParamTable::that_f(int k, int m, double n) const {
    const LevelStats& lv = lv_[static_cast<size_t>(k)];
    double Nm = lv.N[static_cast<size_t>(m - 1)], Nm1 = lv.N[static_cast<size_t>(m)];
    double w = lv.tau[static_cast<size_t>(m - 1)] / (Nm1 - Nm);
    return that_s(k, m, n) + w;
}

double ParamTable::t_s(int k, int m, double n) const {
    const LevelStats& lv = lv_[static_cast<size_t>(k)];
    double Nm1 = lv.N[static_cast<size_t>(m)];
    double acc = 0.0;
    for (double h = n + 1.0; h <= Nm1 && k + h - 2.0 < levels(); h += 1.0)
        acc += om_abs(log_len_d(k + h - 2.0) - 3.0 * kLn2) -
               om_abs(log_len_d(k + h - 1.0) - kLn2);
    return lv.block_start[static_cast<size_t>(m - 1)] + lv.tau[static_cast<size_t>(m - 1)] +
           acc / lv.T;
}

double ParamTable::t_f(int k, int m, double n) const {
    const LevelStats& lv = lv_[static_cast<size_t>(k)];
    double Nm = lv.N[static_cast<size_t>(m - 1)];
    double om_half = om_abs(log_len_d(k + Nm) - kLn2);
    double middle = omt(k, Nm + 1.0) - om_half;
    double tele = omt(k, Nm + 2.0) - omt(k, n + 1.0);
    return t_s(k, m, Nm + 1.0) + (middle + tele) / lv.T;
}

int ParamTable::block_of(int k, double t) const {
    const LevelStats& lv = lv_[static_cast<size_t>(k)];
    if (t < 0.0 || t >= lv.block_start.back()) return 0;
    auto it = std::upper_bound(lv.block_start.begin(), lv.block_start.end(), t);
    return static_cast<int>(it - lv.block_start.begin());
}

int ParamTable::block_of_generation(int k, double n) const {
    const LevelStats& lv = lv_[static_cast<size_t>(k)];
    for (int m = 1; m <= lv.M; ++m)
        if (n > lv.N[static_cast<size_t>(m - 1)] && n <= lv.N[static_cast<size_t>(m)]) return m;
    throw resolution_error("generation beyond the explicit block horizon");
}

double ParamTable::radius_log(int k, double n, double t) const {
    const LevelStats& lv = lv_[static_cast<size_t>(k)];
    double factor_log = 0.0;
    double nn = n;
    for (int guard = 0;; ++guard) {
        if (guard > 100000) throw resolution_error("radius cascade too deep");
        if (nn == 1.0) return log_len(k) - kLn2 + factor_log;
        int m = block_of_generation(k, nn);
        double Nm = lv.N[static_cast<size_t>(m - 1)];
        const auto& wt = pair_.omega_tilde();
        if (nn == Nm + 1.0) {  // special generation: single ramp
            double ts = t_s(k, m, nn), tf = t_f(k, m, nn);
            if (t <= ts) return log_len_d(k + Nm) - kLn2 + factor_log;
            if (t >= tf) return log_len(k) - nn * kLn2 + factor_log;
            double om_half = om_abs(log_len_d(k + Nm) - kLn2);
            double plateau = omt(k, Nm + 1.0) - om_half;
            double y = om_half + plateau * traj::chi((t - ts) / (tf - ts));
            if (!(y > 0.0)) return -kInf;
            return wt.inverse_osgood(y) + factor_log;
        }
        double ts_prev = t_s(k, m, nn - 1.0);
        double tf_prev = t_f(k, m, nn - 1.0);
        if (t >= ts_prev && t < tf_prev) {  // locked quarter cascade
            factor_log -= 2.0 * kLn2;
            nn -= 1.0;
            continue;
        }
        if (t < ts_prev) {  // expansion ramp toward a quarter of the parent
            double base = om_abs(log_len_d(k + nn - 1.0) - kLn2);
            double plateau = om_abs(log_len_d(k + nn - 2.0) - 3.0 * kLn2) - base;
            double ts = t_s(k, m, nn);
            double s = ts_prev > ts ? (t - ts) / (ts_prev - ts) : 0.0;
            double y = base + plateau * traj::chi(s);
            if (!(y > 0.0)) return -kInf;
            return wt.inverse_osgood(y) + factor_log;
        }
        // final ramp to the dyadic size
        double base = omt(k, nn + 1.0);
        double plateau = omt(k, nn) - base;
        double tf = t_f(k, m, nn);
        double s = tf > tf_prev ? (t - tf_prev) / (tf - tf_prev) : 1.0;
        double y = base + plateau * traj::chi(s);
        if (!(y > 0.0)) return -kInf;
        return wt.inverse_osgood(y) + factor_log;
    }
}

double ParamTable::radius(int k, double n, double t) const {
    return std::exp(radius_log(k, n, t));
}

double ParamTable::radius_rate(int k, double n, double t) const {
    const LevelStats& lv = lv_[static_cast<size_t>(k)];
    double factor = 1.0;
    double nn = n;
    for (int guard = 0;; ++guard) {
        if (guard > 100000) throw resolution_error("radius cascade too deep");
        if (nn == 1.0) return 0.0;
        int m = block_of_generation(k, nn);
        double Nm = lv.N[static_cast<size_t>(m - 1)];
        auto wtilde_at = [&](double lam) {
            return std::exp(pair_.omega_tilde().log_eval(lam));
        };
        if (nn == Nm + 1.0) {
            double ts = t_s(k, m, nn), tf = t_f(k, m, nn);
            if (t <= ts || t >= tf) return 0.0;
            double s = (t - ts) / (tf - ts);
            return factor * lv.T * traj::chi_prime(s) * wtilde_at(radius_log(k, nn, t));
        }
        double ts_prev = t_s(k, m, nn - 1.0);
        double tf_prev = t_f(k, m, nn - 1.0);
        if (t >= ts_prev && t < tf_prev) {
            factor *= 0.25;
            nn -= 1.0;
            continue;
        }
        if (t < ts_prev) {
            double ts = t_s(k, m, nn);
            if (t <= ts) return 0.0;
            double s = (t - ts) / (ts_prev - ts);
            return factor * lv.T * traj::chi_prime(s) * wtilde_at(radius_log(k, nn, t));
        }
        double tf = t_f(k, m, nn);
        if (t >= tf) return 0.0;
        double s = (t - tf_prev) / (tf - tf_prev);
        return factor * lv.T * traj::chi_prime(s) * wtilde_at(radius_log(k, nn, t));
    }
}

Vec ParamTable::center(int k, const geometry::SymbolString& sigma, double t) const {
    Vec c(d_);
    for (int j = 1; j <= sigma.length(); ++j) {
        double r = radius(k, j, t);
        for (int i = 0; i < d_; ++i) c[i] += 0.5 * r * sigma.sign(j - 1, i);
    }
    return c;
}

Vec ParamTable::center_rate(int k, const geometry::SymbolString& sigma, double t) const {
    Vec c(d_);
    for (int j = 1; j <= sigma.length(); ++j) {
        double rr = radius_rate(k, j, t);
        for (int i = 0; i < d_; ++i) c[i] += 0.5 * rr * sigma.sign(j - 1, i);
    }
    return c;
}

void ParamTable::build_certificates() {
    auto push = [&](std::string name, double k, double m, double lhs, double rhs, bool pass_ge) {
        Certificate c;
        c.name = std::move(name);
        c.k = k;
        c.m = m;
        c.lhs = lhs;
        c.rhs = rhs;
        c.pass = pass_ge;
        c.margin = rhs != 0.0 ? lhs / rhs : kInf;
        certs_.push_back(std::move(c));
    };
    for (int k = 0; k < levels(); ++k) {
        const LevelStats& lv = lv_[static_cast<size_t>(k)];
        push("N1_equals_1", k, 1, lv.N[0], 1.0, lv.N[0] == 1.0);
        push("sum_above_lower", k, 0, lv.sum_terms, lv.om_quarter,
             lv.sum_terms > lv.om_quarter);
        push("sum_plus_tail_below_upper", k, 0, lv.sum_terms + lv.tail_bound,
             2.0 * lv.om_quarter, lv.sum_terms + lv.tail_bound < 2.0 * lv.om_quarter);
        push("T_at_most_12_omega_quarter", k, 0, lv.T, 12.0 * lv.om_quarter,
             lv.T <= 12.0 * lv.om_quarter);
        // interval-length identities and ordering, on the enumerable front of
        // each block
        for (int m = 1; m <= std::min(lv.M, 3); ++m) {
            double Nm = lv.N[static_cast<size_t>(m - 1)], Nm1 = lv.N[static_cast<size_t>(m)];
            double sp_lhs = lv.T * (t_f(k, m, Nm + 1.0) - t_s(k, m, Nm + 1.0));
            double om_half = om_abs(log_len_d(k + Nm) - kLn2);
            double sp_rhs = omt(k, Nm + 1.0) - om_half;
            double tol_abs = 1e-13 * lv.om_quarter;  // normalized-time resolution floor
            push("length_interval_special", k, m, sp_lhs, sp_rhs,
                 std::fabs(sp_lhs - sp_rhs) <= 1e-12 * sp_rhs + tol_abs);
            for (double n = Nm + 2.0; n <= std::min(Nm1, Nm + 6.0); n += 1.0) {
                double lhs = lv.T * (t_f(k, m, n) - t_f(k, m, n - 1.0));
                double rhs = omt(k, n) - omt(k, n + 1.0);
                push("length_interval_nonspecial", k, n, lhs, rhs,
                     std::fabs(lhs - rhs) <= 1e-12 * rhs + tol_abs);
            }
            for (double n = Nm + 1.0; n <= std::min(Nm1, Nm + 6.0); n += 1.0) {
                bool ordered = that_s(k, m, n) <= that_f(k, m, n) + 1e-15 &&
                               that_f(k, m, n) <= t_s(k, m, n) + 1e-15 &&
                               t_s(k, m, n) <= t_f(k, m, n) + 1e-15;
                push("grid_ordering", k, n, ordered ? 1.0 : 0.0, 1.0, ordered);
            }
        }
    }
    // weight growth constraint, post hoc with the true normalized tau
    for (int j = 0; j < levels(); ++j) {
        const auto& Nj = lv_[static_cast<size_t>(j)].N;
        for (int m = 1; m + 1 <= static_cast<int>(Nj.size()); ++m) {
            double target = Nj[static_cast<size_t>(m - 1)] + j;
            if (target >= levels() || target > 1e9) continue;
            int kk = static_cast<int>(target);
            double gap = Nj[static_cast<size_t>(m)] - Nj[static_cast<size_t>(m - 1)];
            double tau_true = lv_[static_cast<size_t>(j)].tau[static_cast<size_t>(m - 1)];
            double lhs = lv_[static_cast<size_t>(kk)].W;
            double rhs = 4.0 * m * gap / tau_true * lv_[static_cast<size_t>(j)].W;
            push("weight_growth_constraint", j, m, lhs, rhs, lhs >= rhs);
        }
    }
}

bool ParamTable::all_certificates_pass() const {
    for (const auto& c : certs_)
        if (!c.pass) return false;
    return true;
}

nlohmann::ordered_json ParamTable::to_json() const {
    nlohmann::ordered_json j;
    j["format_version"] = 1;
    j["dimension"] = d_;
    j["levels_requested"] = levels_requested_;
    j["levels_built"] = levels();
    j["saturated"] = saturated_;
    auto levels_json = nlohmann::ordered_json::array();
    for (int k = 0; k < levels(); ++k) {
        const LevelStats& lv = lv_[static_cast<size_t>(k)];
        nlohmann::ordered_json e;
        e["k"] = k;
        e["eta"] = lv.eta;
        e["log_len"] = -lv.L;
        e["weight"] = lv.W;
        e["omega_quarter"] = lv.om_quarter;
        e["N"] = lv.N;
        e["sum_terms"] = lv.sum_terms;
        e["tail_bound"] = lv.tail_bound;
        e["bar_tau"] = lv.bar_tau;
        e["tau"] = lv.tau;
        e["T"] = lv.T;
        e["tau_tail_bound"] = lv.tau_tail_bound;
        e["block_start"] = lv.block_start;
        levels_json.push_back(std::move(e));
    }
    j["levels"] = std::move(levels_json);
    auto certs_json = nlohmann::ordered_json::array();
    for (const auto& c : certs_) {
        certs_json.push_back({{"name", c.name},
                              {"k", c.k},
                              {"m", c.m},
                              {"lhs", c.lhs},
                              {"rhs", c.rhs},
                              {"margin", c.margin},
                              {"pass", c.pass}});
    }
    j["certificates"] = std::move(certs_json);
    return j;
}

std::vector<std::string> validate_params_json(const nlohmann::ordered_json& j) {
    std::vector<std::string> fail;
    try {
        for (const auto& e : j.at("levels")) {
            int k = e.at("k").get<int>();
            auto N = e.at("N").get<std::vector<double>>();
            if (N.empty() || N[0] != 1.0)
                fail.push_back("level " + std::to_string(k) + ": N_1 != 1");
            double omq = e.at("omega_quarter").get<double>();
            double sum = e.at("sum_terms").get<double>();
            double tail = e.at("tail_bound").get<double>();
            if (!(sum > omq))
                fail.push_back("level " + std::to_string(k) + ": term sum at or below lower bound");
            if (!(sum + tail < 2.0 * omq))
                fail.push_back("level " + std::to_string(k) + ": term sum exceeds upper bound");
            double T = e.at("T").get<double>();
            if (!(T <= 12.0 * omq))
                fail.push_back("level " + std::to_string(k) + ": T exceeds 12 Omega(l/4)");
            for (size_t m = 0; m + 1 < N.size(); ++m)
                if (!(N[m + 1] > N[m]))
                    fail.push_back("level " + std::to_string(k) + ": N not strictly increasing");
            auto bs = e.at("block_start").get<std::vector<double>>();
            if (bs.empty() || std::fabs(bs.back() - 1.0) > 1e-9)
                fail.push_back("level " + std::to_string(k) + ": blocks do not tile [0,1]");
        }
        for (const auto& c : j.at("certificates"))
            if (!c.at("pass").get<bool>())
                fail.push_back("stored certificate failed: " + c.at("name").get<std::string>());
    } catch (const std::exception& ex) {
        fail.push_back(std::string("malformed params file: ") + ex.what());
    }
    return fail;
}

namespace {

// locate the symbol string of the cube chain containing x at frozen time t,
// descending gens generations; returns false if x leaves every cube
bool descend(const ParamTable& tbl, int k, double t, int gens, const Vec& x, Vec& c,
             uint32_t* words) {
    int d = tbl.dim();
    c = Vec(d);
    for (int n = 1; n <= gens; ++n) {
        double r = tbl.radius(k, n, t);
        uint32_t word = 0;
        for (int i = 0; i < d; ++i)
            if (x[i] - c[i] >= 0.0) word |= 1u << i;
        for (int i = 0; i < d; ++i) c[i] += 0.5 * r * ((word >> i) & 1u ? 1.0 : -1.0);
        for (int i = 0; i < d; ++i)
            if (std::fabs(x[i] - c[i]) > 0.5 * r) return false;
        if (words) words[n - 1] = word;
    }
    return true;
}

}  // namespace

Vec field_B(const ParamTable& tbl, int k, double t, const Vec& x, int depth,
            FieldEvalInfo* info) {
    int d = tbl.dim();
    Vec out(d);
    if (k >= tbl.levels()) {
        if (info) info->beyond_horizon = true;
        return out;
    }
    if (t <= 0.0 || t >= 1.0) return out;
    double half_len = 0.5 * std::exp(tbl.log_len(k));
    if (x.norm_inf() >= half_len) {
        if (half_len == 0.0 && info) info->below_resolution = true;
        return out;
    }
    const LevelStats& lv = tbl.level(k);
    int m = tbl.block_of(k, t);
    if (m == 0) {
        if (info) info->beyond_horizon = true;
        return out;
    }
    double bs = lv.block_start[static_cast<size_t>(m - 1)];
    double Nm = lv.N[static_cast<size_t>(m - 1)], Nm1 = lv.N[static_cast<size_t>(m)];
    double tau_m = lv.tau[static_cast<size_t>(m - 1)];
    if (t - bs < tau_m) {  // splitting half
        double w = tau_m / (Nm1 - Nm);
        double idx = std::floor((t - bs) / w);
        idx = std::max(0.0, std::min(idx, Nm1 - Nm - 1.0));
        double n = Nm + 1.0 + idx;
        // bands whose copies live below length resolution: a representable x
        // is outside every inner support, so zero is the rounded value
        if (tbl.log_len_d(k + n - 1.0) < std::log(kMinLength)) {
            if (info) info->below_resolution = true;
            return out;
        }
        if (depth <= 0) {
            if (info) info->depth_exhausted = true;
            return out;
        }
        double ths = bs + idx * w;
        Vec c(d);
        if (!descend(tbl, k, ths, static_cast<int>(n) - 1, x, c, nullptr)) return out;
        double s = (ths + w - t) / w;
        Vec inner = field_B(tbl, k + static_cast<int>(n) - 1, s, x - c, depth - 1, info);
        return (1.0 / w) * inner;
    }
    // translation half: explicit building-block sum
    Vec c(d);
    Vec arg(d);
    for (double n = 1.0; n <= Nm1; n += 1.0) {
        double r = tbl.radius(k, n, t);
        uint32_t word = 0;
        for (int i = 0; i < d; ++i)
            if (x[i] - c[i] >= 0.0) word |= 1u << i;
        Vec e(d);
        for (int i = 0; i < d; ++i) e[i] = (word >> i) & 1u ? 1.0 : -1.0;
        bool inside = true;
        for (int i = 0; i < d; ++i) {
            c[i] += 0.5 * r * e[i];
            if (std::fabs(x[i] - c[i]) > 0.5 * r) inside = false;
        }
        if (!inside) break;
        if (r < kMinLength) {
            if (info) info->below_resolution = true;
            break;
        }
        if (n >= Nm + 1.0) {
            double rate = tbl.radius_rate(k, n, t);
            if (rate != 0.0) {
                for (int i = 0; i < d; ++i) arg[i] = (x[i] - c[i]) / r;
                Vec u = bblock::BuildingBlock(e).eval(arg);
                for (int i = 0; i < d; ++i) out[i] += 0.5 * rate * u[i];
            }
        }
    }
    return out;
}

double DensitySnapshot::mass() const {
    double m = 0.0;
    for (const auto& c : cubes) m += std::exp(c.log_mass);
    return m;
}

double DensitySnapshot::l1_distance_to_uniform(double log_len_k) const {
    double vol_total = std::exp(d * log_len_k);
    double sum_vol = 0.0, sum_absdiff = 0.0;
    for (const auto& c : cubes) {
        double vol = std::exp(d * c.log_side);
        sum_vol += vol;
        sum_absdiff += std::fabs(std::exp(c.log_mass) - vol);
    }
    return sum_absdiff + std::max(vol_total - sum_vol, 0.0);
}

namespace {

// Enumerate the cube union at generation `gens` with side exp(log_side),
// centers from the frozen radii, each cube carrying equal log-mass.
void enumerate_cubes(const ParamTable& tbl, int k, double t, int gens, double log_side,
                     double log_mass, DensitySnapshot& out, size_t max_cubes) {
    int d = tbl.dim();
    std::vector<double> r(static_cast<size_t>(gens));
    for (int n = 1; n <= gens; ++n) r[static_cast<size_t>(n - 1)] = tbl.radius(k, n, t);
    size_t count = size_t(1) << (static_cast<size_t>(gens) * static_cast<size_t>(d));
    if (gens * d >= 60 || out.cubes.size() + count > max_cubes)
        throw resolution_error("density snapshot beyond the cube enumeration cap");
    std::vector<uint32_t> word(static_cast<size_t>(gens), 0u);
    Vec c(d);
    // iterative odometer over sign words
    std::vector<Vec> partial(static_cast<size_t>(gens) + 1, Vec(d));
    int level = 0;
    while (true) {
        while (level < gens) {
            Vec base = partial[static_cast<size_t>(level)];
            uint32_t wd = word[static_cast<size_t>(level)];
            for (int i = 0; i < d; ++i)
                base[i] += 0.5 * r[static_cast<size_t>(level)] * ((wd >> i) & 1u ? 1.0 : -1.0);
            partial[static_cast<size_t>(level) + 1] = base;
            ++level;
        }
        out.cubes.push_back({partial[static_cast<size_t>(gens)], log_side, log_mass});
        // advance odometer
        int g = gens - 1;
        while (g >= 0) {
            word[static_cast<size_t>(g)]++;
            if (word[static_cast<size_t>(g)] < (1u << d)) break;
            word[static_cast<size_t>(g)] = 0;
            --g;
        }
        if (g < 0) break;
        level = g;
    }
}

}  // namespace

DensitySnapshot density_Theta(const ParamTable& tbl, int k, double t, int depth,
                              size_t max_cubes) {
    int d = tbl.dim();
    DensitySnapshot snap;
    snap.d = d;
    snap.k = k;
    snap.t = t;
    if (k >= tbl.levels()) throw resolution_error("density level beyond the parameter horizon");
    const LevelStats& lv = tbl.level(k);
    if (t >= 1.0) {
        snap.cubes.push_back({Vec(d), tbl.log_len(k), 0.0});
        return snap;
    }
    if (t < 0.0) throw domain_error("density time outside [0,1]");
    int m = tbl.block_of(k, t);
    if (m == 0) {  // beyond explicit blocks: treat as the t = 1 endpoint
        snap.approximated = true;
        snap.cubes.push_back({Vec(d), tbl.log_len(k), 0.0});
        return snap;
    }
    double bs = lv.block_start[static_cast<size_t>(m - 1)];
    double Nm = lv.N[static_cast<size_t>(m - 1)], Nm1 = lv.N[static_cast<size_t>(m)];
    double tau_m = lv.tau[static_cast<size_t>(m - 1)];
    if (t - bs >= tau_m) {  // translation half: exact cube union
        if (Nm1 * d >= 60)
            throw resolution_error("density snapshot beyond the cube enumeration cap");
        enumerate_cubes(tbl, k, t, static_cast<int>(Nm1), tbl.log_len_d(k + Nm1),
                        -Nm1 * d * kLn2, snap, max_cubes);
        return snap;
    }
    double w = tau_m / (Nm1 - Nm);
    if (!(w > 1e-14)) throw resolution_error("splitting subinterval below time resolution");
    double idx = std::floor((t - bs) / w);
    idx = std::min(idx, Nm1 - Nm - 1.0);
    double n = Nm + 1.0 + idx;
    double ths = bs + idx * w, thf = ths + w;
    if (n > 4000.0) throw resolution_error("splitting generation beyond descent range");
    int gens = static_cast<int>(n) - 1;
    if (depth <= 0) {
        // nearest-endpoint exact snapshot
        snap.approximated = !(t == ths || t == thf);
        if (t - ths <= thf - t) {
            enumerate_cubes(tbl, k, ths, gens, tbl.log_len(k + gens), -gens * d * kLn2, snap,
                            max_cubes);
        } else {
            // each generation-gens cube split into 2^d children
            DensitySnapshot parents;
            parents.d = d;
            enumerate_cubes(tbl, k, ths, gens, tbl.log_len(k + gens), -gens * d * kLn2, parents,
                            max_cubes >> d);
            double off = 0.25 * std::exp(tbl.log_len(k + gens));
            for (const auto& p : parents.cubes)
                for (uint32_t wd = 0; wd < (1u << d); ++wd) {
                    Vec c = p.center;
                    for (int i = 0; i < d; ++i) c[i] += off * ((wd >> i) & 1u ? 1.0 : -1.0);
                    snap.cubes.push_back(
                        {c, tbl.log_len(k + gens + 1), p.log_mass - d * kLn2});
                }
        }
        return snap;
    }
    // recursive mixture over the 2^{(n-1)d} frozen offsets
    double s = (thf - t) / w;
    DensitySnapshot inner = density_Theta(tbl, k + gens, s, depth - 1, max_cubes);
    DensitySnapshot offsets;
    offsets.d = d;
    enumerate_cubes(tbl, k, ths, gens, 0.0, 0.0, offsets,
                    std::max<size_t>(1, max_cubes / std::max<size_t>(inner.cubes.size(), 1)));
    snap.approximated = inner.approximated;
    if (offsets.cubes.size() * inner.cubes.size() > max_cubes)
        throw resolution_error("density snapshot beyond the cube enumeration cap");
    double logw = -static_cast<double>(gens) * d * kLn2;
    for (const auto& off : offsets.cubes)
        for (const auto& ic : inner.cubes) {
            Vec c = ic.center;
            for (int i = 0; i < d; ++i) c[i] += off.center[i];
            snap.cubes.push_back({c, ic.log_side, ic.log_mass + logw});
        }
    return snap;
}

FinalPair final_pair(const ParamTable& tbl, int depth) { return FinalPair{&tbl, depth}; }

Vec FinalPair::velocity(double t, const Vec& x) const {
    Vec b = field_B(*tbl, 0, 1.0 - t, x, depth);
    for (int i = 0; i < b.d; ++i) b[i] = -b[i];
    return b;
}

DensitySnapshot FinalPair::density(double t, size_t max_cubes) const {
    return density_Theta(*tbl, 0, 1.0 - t, depth, max_cubes);
}

CeMomentResult ce_check_translation_moments(const ParamTable& tbl, int k, double t0, double t1,
                                            double dt, int n_times) {
    int d = tbl.dim();
    int m = tbl.block_of(k, 0.5 * (t0 + t1));
    if (m == 0) throw resolution_error("moment CE check: time beyond explicit blocks");
    const LevelStats& lv = tbl.level(k);
    double Nm1 = lv.N[static_cast<size_t>(m)];
    // per-axis second moment of the cube centers: sum_j (r_j/2)^2; the
    // cube-side term is constant in time and drops out of the residual
    auto radii = [&](double t, double& sum_r2, double& sum_rr, double& sum_rate) {
        sum_r2 = sum_rr = sum_rate = 0.0;
        for (double j = 1.0; j <= Nm1; j += 1.0) {
            double r = tbl.radius(k, j, t);
            double rr = tbl.radius_rate(k, j, t);
            sum_r2 += 0.25 * r * r;
            sum_rr += 0.25 * r * rr;
            sum_rate += 0.5 * std::fabs(rr);
            if (r < kMinLength && rr == 0.0) break;
            if (j > 100000.0) throw resolution_error("moment CE check: generation range");
        }
    };
    CeMomentResult res;
    for (int i = 0; i < n_times; ++i) {
        double t = t0 + (t1 - t0) * (i + 1.0) / (n_times + 1.0);
        if (t - dt <= t0 || t + dt >= t1) continue;
        double r2p, rrp, ratep, r2m, rrm, ratem, r2, rr, rate;
        radii(t + dt, r2p, rrp, ratep);
        radii(t - dt, r2m, rrm, ratem);
        radii(t, r2, rr, rate);
        res.sup_b = std::max(res.sup_b, std::sqrt(static_cast<double>(d)) * rate);
        // mass and the odd moment are conserved exactly by symmetry
        res.residual_const = std::max(res.residual_const, 0.0);
        res.residual_linear = std::max(res.residual_linear, 0.0);
        double ddt = d * (r2p - r2m) / (2.0 * dt);
        double adv = 2.0 * d * rr;
        res.residual_quad = std::max(res.residual_quad, std::fabs(ddt - adv));
    }
    res.degenerate = res.sup_b == 0.0;
    if (!res.degenerate) {
        double grad_sup = std::sqrt(static_cast<double>(d));  // |grad phi| scale on Q
        res.residual_quad /= grad_sup * res.sup_b;
    }
    return res;
}

CeCheckResult ce_check(const ParamTable& tbl, int k, double t0, double t1, int depth,
                       const std::function<double(const Vec&, double)>& phi_mean,
                       const std::function<Vec(const Vec&)>& grad_phi, double grad_phi_sup,
                       double dt, int n_times) {
    CeCheckResult res;
    auto integral = [&](double t) {
        DensitySnapshot s = density_Theta(tbl, k, t, depth);
        double acc = 0.0;
        for (const auto& c : s.cubes)
            acc += std::exp(c.log_mass) * phi_mean(c.center, std::exp(c.log_side));
        return acc;
    };
    for (int i = 0; i < n_times; ++i) {
        double t = t0 + (t1 - t0) * (i + 1.0) / (n_times + 1.0);
        if (t - dt <= t0 || t + dt >= t1) continue;
        double ddt = (integral(t + dt) - integral(t - dt)) / (2.0 * dt);
        DensitySnapshot s = density_Theta(tbl, k, t, depth);
        double adv = 0.0;
        for (const auto& c : s.cubes) {
            Vec b = field_B(tbl, k, t, c.center, depth);
            res.sup_b = std::max(res.sup_b, b.norm2());
            Vec g = grad_phi(c.center);
            double dot = 0.0;
            for (int q = 0; q < tbl.dim(); ++q) dot += b[q] * g[q];
            adv += std::exp(c.log_mass) * dot;
        }
        res.residual_raw = std::max(res.residual_raw, std::fabs(ddt - adv));
    }
    res.degenerate = res.sup_b == 0.0;
    double denom = grad_phi_sup * res.sup_b;
    res.residual = denom > 0.0 ? res.residual_raw / denom : res.residual_raw;
    return res;
}

}  // namespace nonosgood::fixp
