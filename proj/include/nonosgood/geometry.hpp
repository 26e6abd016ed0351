#pragma once

#include <string>
#include <vector>

#include "nonosgood/common.hpp"

namespace nonosgood::geometry {

/// Symbol string sigma in {-1,+1}^{d x n}, one packed sign word per generation.
struct SymbolString {
    int d = 2;
    std::vector<uint32_t> gen;  // bit i set => coordinate i is +1

    SymbolString() = default;
    SymbolString(int dim, int n) : d(dim), gen(static_cast<size_t>(n), 0u) {}

    int length() const { return static_cast<int>(gen.size()); }
    int sign(int g, int axis) const { return (gen[static_cast<size_t>(g)] >> axis) & 1u ? 1 : -1; }
    void set_sign(int g, int axis, int s) {
        uint32_t bit = 1u << axis;
        if (s > 0)
            gen[static_cast<size_t>(g)] |= bit;
        else
            gen[static_cast<size_t>(g)] &= ~bit;
    }
    SymbolString prefix() const {
        SymbolString p = *this;
        p.gen.pop_back();
        return p;
    }
    bool operator==(const SymbolString& o) const { return d == o.d && gen == o.gen; }

    // "+-|++" style: one +/- per coordinate, generations separated by '|'
    std::string to_string() const;
    static SymbolString parse(const std::string& s, int d);

    /// Enumerates all of S^n in a fixed order (lexicographic over sign words).
    static std::vector<SymbolString> all(int d, int n);
};

/// Lengths ell_n = 2^{-n-nu_n}, carried as logs.
class LengthSequence {
public:
    static LengthSequence uniform(double eta, int n_max);
    static LengthSequence from_etas(const std::vector<double>& etas);

    int max_generation() const { return static_cast<int>(log_len_.size()) - 1; }
    double log_len(int n) const { return log_len_[static_cast<size_t>(n)]; }
    /// Raw length; refuses generations whose length is not representable.
    double len(int n) const;

private:
    std::vector<double> log_len_;
};

/// Center of the n-th Cantor-generation cube: sum of (ell_{j-1}/4) sigma_j.
Vec cantor_center(const LengthSequence& L, const SymbolString& sigma);

/// Center of the n-th dyadic cube: sum of 2^{-j-1} sigma_j.
Vec dyadic_center(const SymbolString& sigma);

/// Unique symbol string with x in the sigma-cube of generation n; throws
/// location_error naming the failing generation if x is in a gap.
SymbolString locate_symbols(const LengthSequence& L, const Vec& x, int n);

/// n-term truncation of the target map S^eta.
Vec target_map(const LengthSequence& L, const Vec& x, int n);

}  // namespace nonosgood::geometry
