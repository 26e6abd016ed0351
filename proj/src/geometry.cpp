#include "nonosgood/geometry.hpp"

#include <cmath>

namespace nonosgood::geometry {

namespace {
constexpr double kLn2 = 0.6931471805599453;
}

std::string SymbolString::to_string() const {
    std::string s;
    for (int g = 0; g < length(); ++g) {
        if (g) s += '|';
        for (int i = 0; i < d; ++i) s += sign(g, i) > 0 ? '+' : '-';
    }
    return s;
}

SymbolString SymbolString::parse(const std::string& s, int d) {
    SymbolString out(d, 0);
    uint32_t word = 0;
    int axis = 0;
    for (char ch : s) {
        if (ch == '|') continue;
        if (ch == '+') word |= 1u << axis;
        ++axis;
        if (axis == d) {
            out.gen.push_back(word);
            word = 0;
            axis = 0;
        }
    }
    if (axis != 0) throw construction_error("symbol string length not a multiple of d");
    return out;
}

std::vector<SymbolString> SymbolString::all(int d, int n) {
    uint64_t per_gen = 1ull << d;
    uint64_t total = 1;
    for (int g = 0; g < n; ++g) total *= per_gen;
    std::vector<SymbolString> out;
    out.reserve(total);
    for (uint64_t code = 0; code < total; ++code) {
        SymbolString s(d, n);
        uint64_t c = code;
        for (int g = 0; g < n; ++g) {
            s.gen[static_cast<size_t>(g)] = static_cast<uint32_t>(c % per_gen);
            c /= per_gen;
        }
        out.push_back(std::move(s));
    }
    return out;
}

LengthSequence LengthSequence::uniform(double eta, int n_max) {
    std::vector<double> etas(static_cast<size_t>(n_max), eta);
    return from_etas(etas);
}

LengthSequence LengthSequence::from_etas(const std::vector<double>& etas) {
    LengthSequence L;
    L.log_len_.resize(etas.size() + 1);
    double nu = 0.0;
    L.log_len_[0] = 0.0;
    for (size_t n = 1; n <= etas.size(); ++n) {
        nu += etas[n - 1];
        L.log_len_[n] = -(static_cast<double>(n) + nu) * kLn2;
    }
    return L;
}

double LengthSequence::len(int n) const {
    double ll = log_len(n);
    if (ll < std::log(kMinLength))
        throw resolution_error("generation length below linear-coordinate resolution");
    return std::exp(ll);
}

Vec cantor_center(const LengthSequence& L, const SymbolString& sigma) {
    Vec c(sigma.d);
    for (int j = 1; j <= sigma.length(); ++j) {
        double step = 0.25 * L.len(j - 1);
        for (int i = 0; i < sigma.d; ++i) c[i] += step * sigma.sign(j - 1, i);
    }
    return c;
}

Vec dyadic_center(const SymbolString& sigma) {
    Vec c(sigma.d);
    for (int j = 1; j <= sigma.length(); ++j) {
        double step = std::pow(2.0, -j - 1);
        for (int i = 0; i < sigma.d; ++i) c[i] += step * sigma.sign(j - 1, i);
    }
    return c;
}

SymbolString locate_symbols(const LengthSequence& L, const Vec& x, int n) {
    SymbolString sigma(x.d, n);
    Vec c(x.d);
    for (int j = 1; j <= n; ++j) {
        double step = 0.25 * L.len(j - 1);
        for (int i = 0; i < x.d; ++i) {
            int s = (x[i] - c[i] >= 0.0) ? 1 : -1;  // face ties resolve to +1
            sigma.set_sign(j - 1, i, s);
            c[i] += step * s;
        }
        double half = 0.5 * L.len(j);
        for (int i = 0; i < x.d; ++i)
            if (std::fabs(x[i] - c[i]) > half)
                throw location_error("point outside Cantor generation", j);
    }
    return sigma;
}

Vec target_map(const LengthSequence& L, const Vec& x, int n) {
    return dyadic_center(locate_symbols(L, x, n));
}

}  // namespace nonosgood::geometry
