#include "nonosgood/moc.hpp"

#include <algorithm>
#include <cmath>

namespace nonosgood::moc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.6931471805599453;

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
           simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
    if (!(a < b)) return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return simpson(f, a, b, fa, fm, fb, tol, 48);
}

}  // namespace

Modulus Modulus::catalog(double a, double eps) {
    if (!(a > 0.0) || eps < 0.0) throw construction_error("catalog modulus needs a > 0, eps >= 0");
    Modulus m;
    m.kind_ = Kind::Catalog;
    m.a_ = a;
    m.eps_ = eps;
    m.domain_max_log_ = a - 1.0 - eps;  // z*, strict-monotone range top
    m.non_osgood_ = eps > 0.0;
    return m;
}

Modulus Modulus::tabulated(std::vector<double> knot_log_r, std::vector<double> knot_log_w) {
    if (knot_log_r.size() < 2 || knot_log_r.size() != knot_log_w.size())
        throw construction_error("tabulated modulus needs at least two (ln r, ln w) rows");
    Modulus m;
    m.kind_ = Kind::Tabulated;
    m.klam_ = std::move(knot_log_r);
    m.klw_ = std::move(knot_log_w);
    size_t n = m.klam_.size();
    for (size_t j = 0; j + 1 < n; ++j) {
        if (!(m.klam_[j] > m.klam_[j + 1]))
            throw construction_error("tabulated modulus: ln r column must be strictly decreasing");
        if (!(m.klw_[j] > m.klw_[j + 1]))
            throw construction_error("tabulated modulus: values must be strictly increasing in r");
    }
    // exponents p_j of the log-log affine pieces; concavity needs p <= 1 and
    // p non-decreasing with depth
    double prev_p = -kInf;
    for (size_t j = 0; j + 1 < n; ++j) {
        double p = (m.klw_[j] - m.klw_[j + 1]) / (m.klam_[j] - m.klam_[j + 1]);
        if (p > 1.0 + 1e-12 || p < prev_p - 1e-12)
            throw construction_error("tabulated modulus: concavity violated beyond 1e-12 slack");
        prev_p = p;
    }
    m.domain_max_log_ = m.klam_.front();
    double p_deep = (m.klw_[n - 2] - m.klw_[n - 1]) / (m.klam_[n - 2] - m.klam_[n - 1]);
    m.non_osgood_ = p_deep < 1.0 - 1e-12;
    m.build_pw_tables();
    return m;
}

Modulus Modulus::piecewise_affine(std::vector<double> knot_log_r, std::vector<double> knot_log_w,
                                  std::shared_ptr<const Modulus> tail, double tail_scale_log) {
    if (knot_log_r.size() < 2 || knot_log_r.size() != knot_log_w.size())
        throw construction_error("piecewise-affine modulus needs at least two knots");
    Modulus m;
    m.kind_ = Kind::PiecewiseAffine;
    m.klam_ = std::move(knot_log_r);
    m.klw_ = std::move(knot_log_w);
    m.tail_ = std::move(tail);
    m.tail_scale_log_ = tail_scale_log;
    m.domain_max_log_ = m.klam_.front();
    m.non_osgood_ = m.tail_ ? m.tail_->non_osgood() : false;
    m.build_pw_tables();
    return m;
}

int Modulus::find_piece(double log_r) const {
    // piece j lives on [klam_[j+1], klam_[j]]
    auto it = std::lower_bound(klam_.begin(), klam_.end(), log_r, std::greater<double>());
    int idx = static_cast<int>(it - klam_.begin());
    if (idx == 0) idx = 1;
    if (idx >= static_cast<int>(klam_.size())) idx = static_cast<int>(klam_.size()) - 1;
    return idx - 1;
}

double Modulus::log_eval(double log_r) const {
    switch (kind_) {
        case Kind::Catalog: {
            double lam = std::min(log_r, domain_max_log_);
            return lam + (1.0 + eps_) * std::log(a_ - lam);
        }
        case Kind::Tabulated: {
            if (log_r > domain_max_log_ + 1e-12)
                throw domain_error("modulus evaluated above its domain max");
            size_t n = klam_.size();
            if (log_r <= klam_[n - 1]) {  // power-law extension below deepest knot
                double p = (klw_[n - 2] - klw_[n - 1]) / (klam_[n - 2] - klam_[n - 1]);
                return klw_[n - 1] + p * (log_r - klam_[n - 1]);
            }
            int j = find_piece(log_r);
            double p = (klw_[j] - klw_[j + 1]) / (klam_[j] - klam_[j + 1]);
            return klw_[j + 1] + p * (log_r - klam_[j + 1]);
        }
        case Kind::PiecewiseAffine: {
            if (log_r > domain_max_log_ + 1e-12)
                throw domain_error("modulus evaluated above its domain max");
            size_t n = klam_.size();
            if (log_r <= klam_[n - 1]) {
                if (tail_) return tail_->log_eval(log_r) + tail_scale_log_;
                return klw_[n - 1] + (log_r - klam_[n - 1]);  // chord through origin
            }
            int j = find_piece(log_r);
            // w(r) = w_{j+1} + s_j (r - r_{j+1}), assembled from stored logs
            double u = std::exp(ls_[j] + klam_[j + 1] - klw_[j + 1]);
            return klw_[j + 1] + std::log1p(u * std::expm1(log_r - klam_[j + 1]));
        }
    }
    return 0.0;
}

double Modulus::log_ratio(double log_r) const {
    switch (kind_) {
        case Kind::Catalog: {
            if (log_r > domain_max_log_)
                return log_eval(domain_max_log_) - log_r;  // flat continuation
            return (1.0 + eps_) * std::log(a_ - log_r);
        }
        case Kind::Tabulated: {
            if (log_r > domain_max_log_ + 1e-12)
                throw domain_error("modulus evaluated above its domain max");
            size_t n = klam_.size();
            if (log_r <= klam_[n - 1]) {
                double p = (klw_[n - 2] - klw_[n - 1]) / (klam_[n - 2] - klam_[n - 1]);
                return (klw_[n - 1] - klam_[n - 1]) + (p - 1.0) * (log_r - klam_[n - 1]);
            }
            int j = find_piece(log_r);
            double p = (klw_[j] - klw_[j + 1]) / (klam_[j] - klam_[j + 1]);
            return (klw_[j + 1] - klam_[j + 1]) + (p - 1.0) * (log_r - klam_[j + 1]);
        }
        case Kind::PiecewiseAffine: {
            if (log_r > domain_max_log_ + 1e-12)
                throw domain_error("modulus evaluated above its domain max");
            size_t n = klam_.size();
            if (log_r <= klam_[n - 1]) {
                if (tail_) return tail_->log_ratio(log_r) + tail_scale_log_;
                return klw_[n - 1] - klam_[n - 1];
            }
            int j = find_piece(log_r);
            double u = std::exp(ls_[j] + klam_[j + 1] - klw_[j + 1]);
            return (klw_[j + 1] - klam_[j + 1]) + std::log1p(u * std::expm1(log_r - klam_[j + 1])) +
                   (klam_[j + 1] - log_r);
        }
    }
    return 0.0;
}

void Modulus::build_pw_tables() {
    size_t n = klam_.size();
    ls_.assign(n - 1, 0.0);
    inc_.assign(n - 1, 0.0);
    if (kind_ == Kind::PiecewiseAffine) {
        for (size_t j = 0; j + 1 < n; ++j) {
            double ldw = klw_[j + 1] + std::log(std::expm1(klw_[j] - klw_[j + 1]));
            double ldr = klam_[j + 1] + std::log(std::expm1(klam_[j] - klam_[j + 1]));
            ls_[j] = ldw - ldr;
            // integral of dr/w over the piece: (ln w_j - ln w_{j+1}) / s_j
            inc_[j] = (klw_[j] - klw_[j + 1]) * std::exp(-ls_[j]);
        }
        if (tail_ && tail_->non_osgood())
            om_tail_ = std::exp(-tail_scale_log_) * tail_->osgood_total(klam_[n - 1]);
        else
            om_tail_ = kInf;  // marks a divergent tail
    } else {  // Tabulated: log-log pieces w = w_{j+1} (r/r_{j+1})^p
        for (size_t j = 0; j + 1 < n; ++j) {
            double p = (klw_[j] - klw_[j + 1]) / (klam_[j] - klam_[j + 1]);
            double base = std::exp(klam_[j + 1] - klw_[j + 1]);  // r_{j+1}/w_{j+1}
            if (std::fabs(1.0 - p) < 1e-13)
                inc_[j] = base * (klam_[j] - klam_[j + 1]);
            else
                inc_[j] = base * std::expm1((1.0 - p) * (klam_[j] - klam_[j + 1])) / (1.0 - p);
        }
        double p_deep = (klw_[n - 2] - klw_[n - 1]) / (klam_[n - 2] - klam_[n - 1]);
        if (p_deep < 1.0 - 1e-12)
            om_tail_ = std::exp(klam_[n - 1] - klw_[n - 1]) / (1.0 - p_deep);
        else
            om_tail_ = kInf;
    }
    // integrals anchored at the deepest knot so finite intervals stay finite
    // even when the from-zero tail diverges
    om_at_knot_.assign(n, 0.0);
    for (int j = static_cast<int>(n) - 2; j >= 0; --j)
        om_at_knot_[j] = om_at_knot_[j + 1] + inc_[j];
}

// integral of 1/w from the deepest knot up to lam (negative below it)
double Modulus::rel_integral(double lam) const {
    size_t n = klam_.size();
    if (lam > domain_max_log_ + 1e-12) throw domain_error("osgood_integral above domain max");
    if (lam <= klam_[n - 1]) {
        if (kind_ == Kind::PiecewiseAffine) {
            if (tail_)
                return -std::exp(-tail_scale_log_) *
                       tail_->osgood_integral(lam, klam_[n - 1]);
            return std::exp(klam_[n - 1] - klw_[n - 1]) * (lam - klam_[n - 1]);
        }
        double p = (klw_[n - 2] - klw_[n - 1]) / (klam_[n - 2] - klam_[n - 1]);
        double base = std::exp(klam_[n - 1] - klw_[n - 1]);
        if (std::fabs(1.0 - p) < 1e-13) return base * (lam - klam_[n - 1]);
        return base * std::expm1((1.0 - p) * (lam - klam_[n - 1])) / (1.0 - p);
    }
    int j = find_piece(lam);
    double part;
    if (kind_ == Kind::PiecewiseAffine) {
        part = (log_eval(lam) - klw_[j + 1]) * std::exp(-ls_[j]);
    } else {
        double p = (klw_[j] - klw_[j + 1]) / (klam_[j] - klam_[j + 1]);
        double base = std::exp(klam_[j + 1] - klw_[j + 1]);
        part = std::fabs(1.0 - p) < 1e-13
                   ? base * (lam - klam_[j + 1])
                   : base * std::expm1((1.0 - p) * (lam - klam_[j + 1])) / (1.0 - p);
    }
    return om_at_knot_[static_cast<size_t>(j) + 1] + part;
}

double Modulus::osgood_integral(double log_a, double log_b) const {
    if (!(log_a < log_b)) throw domain_error("osgood_integral needs log_a < log_b");
    bool from_zero = std::isinf(log_a) && log_a < 0;
    if (kind_ == Kind::Catalog) {
        double lam_hi = std::min(log_b, domain_max_log_);
        double above = 0.0;
        if (log_b > domain_max_log_) {
            // flat continuation: integrand 1/w(z*) constant
            double wstar = eval_log(domain_max_log_);
            above = (std::exp(log_b) - std::exp(domain_max_log_)) / wstar;
        }
        if (eps_ == 0.0) {
            if (from_zero) throw divergence_error("Osgood modulus: integral from 0 diverges");
            // antiderivative -ln(a - lam)
            return above - std::log(a_ - lam_hi) + std::log(a_ - std::min(log_a, lam_hi));
        }
        auto F = [&](double lam) { return std::pow(a_ - lam, -eps_) / eps_; };
        double lo = from_zero ? 0.0 : F(std::min(log_a, lam_hi));
        return above + F(lam_hi) - lo;
    }
    if (from_zero) {
        if (std::isinf(om_tail_))
            throw divergence_error("Osgood modulus: integral from 0 diverges");
        return om_tail_ + rel_integral(log_b);
    }
    return rel_integral(log_b) - rel_integral(log_a);
}

double Modulus::inverse_osgood(double y) const {
    if (!(y > 0.0)) throw domain_error("inverse_osgood needs y > 0");
    if (kind_ == Kind::Catalog) {
        if (eps_ == 0.0) throw divergence_error("Osgood catalog modulus has no inverse from 0");
        double om_star = std::pow(a_ - domain_max_log_, -eps_) / eps_;
        if (y <= om_star) return a_ - std::pow(eps_ * y, -1.0 / eps_);
        double wstar = eval_log(domain_max_log_);
        return std::log(std::exp(domain_max_log_) + (y - om_star) * wstar);
    }
    size_t n = klam_.size();
    if (std::isinf(om_tail_))
        throw divergence_error("divergent integral: inverse undefined");
    double yrel = y - om_tail_;  // relative to the deepest knot
    if (yrel > om_at_knot_[0]) throw domain_error("inverse_osgood: y above integral range");
    if (yrel <= 0.0) {
        if (kind_ == Kind::PiecewiseAffine && tail_)
            return tail_->inverse_osgood(y * std::exp(tail_scale_log_));
        double p = (klw_[n - 2] - klw_[n - 1]) / (klam_[n - 2] - klam_[n - 1]);
        return klam_[n - 1] +
               (std::log(y * (1.0 - p)) - (klam_[n - 1] - klw_[n - 1])) / (1.0 - p);
    }
    // find piece with om_at_knot_[j+1] < yrel <= om_at_knot_[j]
    int j = static_cast<int>(n) - 2;
    for (size_t i = 0; i + 1 < n; ++i)
        if (yrel <= om_at_knot_[i] && yrel > om_at_knot_[i + 1]) {
            j = static_cast<int>(i);
            break;
        }
    if (kind_ == Kind::PiecewiseAffine) {
        double lw = klw_[j + 1] + (yrel - om_at_knot_[j + 1]) * std::exp(ls_[j]);
        double u = std::exp(ls_[j] + klam_[j + 1] - klw_[j + 1]);
        return klam_[j + 1] + std::log1p(std::expm1(lw - klw_[j + 1]) / u);
    }
    double p = (klw_[j] - klw_[j + 1]) / (klam_[j] - klam_[j + 1]);
    double base = std::exp(klam_[j + 1] - klw_[j + 1]);
    double part = yrel - om_at_knot_[j + 1];
    if (std::fabs(1.0 - p) < 1e-13) return klam_[j + 1] + part / base;
    return klam_[j + 1] + std::log1p(part * (1.0 - p) / base) / (1.0 - p);
}

double Modulus::osgood_quadrature(double log_a, double log_b, double rel_tol) const {
    auto g = [&](double lam) { return std::exp(-log_ratio(lam)); };
    if (!(std::isinf(log_a) && log_a < 0)) {
        double rough = std::max(g(log_a), g(log_b)) * (log_b - log_a);
        return adaptive_simpson(g, log_a, log_b, rel_tol * std::max(rough, 1e-300));
    }
    // From zero: substitute mu = ln(c - lam) with c = log_b + 1. The integrand
    // h(mu) = g(c - e^mu) e^mu decays exponentially for non-Osgood moduli.
    double c = log_b + 1.0;
    auto h = [&](double mu) {
        double e = std::exp(mu);
        return g(c - e) * e;
    };
    double acc = 0.0;
    double scale = std::max(h(0.0), 1e-300);
    double prev_block = kInf;
    int stall = 0;
    for (int j = 0;; ++j) {
        double block = adaptive_simpson(h, static_cast<double>(j), static_cast<double>(j + 1),
                                        rel_tol * scale * 0.05);
        acc += block;
        if (block <= rel_tol * std::fabs(acc) * 0.1 && j >= 4) break;
        if (block > 0.97 * prev_block) {
            if (++stall > 64)
                throw divergence_error("quadrature non-convergence: Osgood modulus suspected");
        } else {
            stall = 0;
        }
        prev_block = block;
        if (j > 4096) throw divergence_error("quadrature non-convergence");
    }
    return acc;
}

AuxiliaryBuild build_auxiliary(const Modulus& m, int depth) {
    if (depth < 2) throw construction_error("build_auxiliary needs depth >= 2");
    if (!m.non_osgood()) throw construction_error("build_auxiliary needs a non-Osgood modulus");
    if (m.domain_max_log() < 0.0)
        throw construction_error("build_auxiliary needs the modulus defined at r = 1");

    double lw1 = m.log_eval(0.0);
    // knot radii: log w(r_n) = log w(1) - (n-1) ln 2
    std::vector<double> lam(static_cast<size_t>(depth) + 2, 0.0);
    lam[1] = 0.0;
    bool truncated = false;
    int have = depth + 1;
    for (int n = 2; n <= depth + 1; ++n) {
        double target = lw1 - (n - 1) * kLn2;
        double hi = lam[n - 1], lo = hi - 8.0;
        while (m.log_eval(lo) > target) {
            hi = lo;
            lo -= 8.0 * (lam[n - 1] - lo > 64.0 ? 4.0 : 1.0);
            if (lo < -8e305) {
                truncated = true;
                break;
            }
        }
        if (truncated) {
            have = n - 1;
            break;
        }
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (m.log_eval(mid) > target)
                hi = mid;
            else
                lo = mid;
            if (hi - lo < 1e-14 * std::max(1.0, std::fabs(mid))) break;
        }
        lam[n] = 0.5 * (lo + hi);
        if (std::fabs(m.log_eval(lam[n]) - target) > 1e-9)
            throw construction_error("build_auxiliary: root-find failed for knot radius");
    }
    int D = std::min(depth, have - 1);
    if (D < 2) throw construction_error("build_auxiliary: usable depth collapsed below 2");

    // b_n = 2^n (r_n - r_{n+1}); values stay O(1) for concave moduli
    std::vector<double> log_b(static_cast<size_t>(D) + 1, 0.0);
    std::vector<double> b(static_cast<size_t>(D) + 1, 0.0);
    for (int n = 1; n <= D; ++n) {
        log_b[n] = n * kLn2 + lam[n + 1] + std::log(std::expm1(lam[n] - lam[n + 1]));
        b[n] = std::exp(log_b[n]);
    }
    // tail-threshold ceiling abar from within-horizon tail sums
    std::vector<double> tail(static_cast<size_t>(D) + 2, 0.0);
    for (int n = D; n >= 1; --n) tail[n] = tail[n + 1] + b[n];
    std::vector<double> abar(static_cast<size_t>(D) + 1, 1.0);
    {
        int k = 1, n = 2;
        for (; n <= D; ++n) {
            while (tail[n] < std::pow(2.0, -k)) ++k;
            abar[n] = k;
        }
    }
    std::vector<double> a(static_cast<size_t>(D) + 1, 1.0);
    a[1] = 1.0;
    for (int n = 1; n + 1 <= D; ++n) {
        double ratio = (b[n + 1] + b[n]) / (2.0 * b[n + 1]);
        a[n + 1] = std::min(ratio * a[n], abar[n + 1]);
    }

    std::vector<double> klam(static_cast<size_t>(D)), klw(static_cast<size_t>(D));
    for (int n = 1; n <= D; ++n) {
        klam[n - 1] = lam[n];
        klw[n - 1] = m.log_eval(lam[n]) - std::log(a[n]);
    }
    AuxiliaryBuild out;
    out.log_r = klam;
    out.a = std::vector<double>(a.begin() + 1, a.begin() + D + 1);
    out.log_b = std::vector<double>(log_b.begin() + 1, log_b.begin() + D + 1);
    out.truncated = truncated || D < depth;
    double cert = 0.0;
    for (int n = 1; n + 1 <= D; ++n) cert += b[n] * a[n + 1];
    out.certificate_sum = cert;
    out.aux = Modulus::piecewise_affine(std::move(klam), std::move(klw),
                                        std::make_shared<Modulus>(m), -std::log(a[D]));
    return out;
}

ModulusPair::ModulusPair(Modulus omega, Modulus omega_tilde)
    : omega_(std::move(omega)), tilde_(std::move(omega_tilde)) {
    monotone_ratio_ = omega_.kind() == Modulus::Kind::Catalog &&
                      tilde_.kind() == Modulus::Kind::Catalog &&
                      omega_.catalog_a() == tilde_.catalog_a() &&
                      omega_.catalog_eps() >= tilde_.catalog_eps();
    for (int i = 0; i <= 64; ++i) {
        double lam = -0.25 * i;
        if (tilde_.log_eval(lam) > omega_.log_eval(lam) + 1e-12)
            throw construction_error("modulus pair: omega_tilde exceeds omega");
    }
}

double ModulusPair::weight(double log_r) const {
    auto log_ratio = [&](double lam) { return omega_.log_ratio(lam) - tilde_.log_ratio(lam); };
    if (monotone_ratio_) return std::exp(log_ratio(log_r));
    double best = log_ratio(log_r);
    // candidate interior minima: knot points of either modulus plus a
    // golden-section pass on each adjacent piece
    std::vector<double> anchors{log_r};
    for (const Modulus* mm : {&omega_, &tilde_})
        for (double k : mm->knot_log_r())
            if (k < log_r && k > kSearchFloorLog) anchors.push_back(k);
    std::sort(anchors.begin(), anchors.end(), std::greater<double>());
    for (double k : anchors) best = std::min(best, log_ratio(k));
    anchors.push_back(std::max(kSearchFloorLog, anchors.back() - 64.0));
    const double gr = 0.6180339887498949;
    for (size_t i = 0; i + 1 < anchors.size(); ++i) {
        double hi = anchors[i], lo = anchors[i + 1];
        double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        double f1 = log_ratio(x1), f2 = log_ratio(x2);
        for (int it = 0; it < 40; ++it) {
            if (f1 < f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - gr * (hi - lo);
                f1 = log_ratio(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + gr * (hi - lo);
                f2 = log_ratio(x2);
            }
        }
        best = std::min(best, std::min(f1, f2));
    }
    return std::exp(best);
}

}  // namespace nonosgood::moc
