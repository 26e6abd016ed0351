#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

namespace nonosgood {

inline constexpr int kMaxDim = 8;

// Lengths below this are treated as geometrically unresolvable in linear
// coordinates; they survive only as logs.
inline constexpr double kMinLength = 1e-280;

// Fixed-capacity point/velocity vector. Dimension is runtime but capped.
struct Vec {
    std::array<double, kMaxDim> c{};
    int d = 0;

    Vec() = default;
    explicit Vec(int dim) : d(dim) { c.fill(0.0); }
    static Vec zero(int dim) { return Vec(dim); }

    double& operator[](int i) { return c[static_cast<size_t>(i)]; }
    double operator[](int i) const { return c[static_cast<size_t>(i)]; }

    Vec& operator+=(const Vec& o) {
        for (int i = 0; i < d; ++i) c[i] += o.c[i];
        return *this;
    }
    Vec& operator-=(const Vec& o) {
        for (int i = 0; i < d; ++i) c[i] -= o.c[i];
        return *this;
    }
    Vec& operator*=(double s) {
        for (int i = 0; i < d; ++i) c[i] *= s;
        return *this;
    }
    friend Vec operator+(Vec a, const Vec& b) { return a += b; }
    friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
    friend Vec operator*(double s, Vec a) { return a *= s; }

    double norm_inf() const {
        double m = 0.0;
        for (int i = 0; i < d; ++i) m = std::max(m, std::fabs(c[i]));
        return m;
    }
    double norm2() const {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += c[i] * c[i];
        return std::sqrt(s);
    }
};

struct domain_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct divergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct construction_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct resolution_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct location_error : std::runtime_error {
    location_error(const std::string& msg, int gen) : std::runtime_error(msg), generation(gen) {}
    int generation;
};
struct stiffness_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Counter-based deterministic RNG (splitmix64). Distribution mapping is
// pinned here so outputs are identical across platforms and stdlibs.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    // uniform in [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }
    // independent stream for sample i of a named pass
    static Rng stream(uint64_t seed, uint64_t pass, uint64_t i) {
        Rng r(seed ^ (pass * 0x9e3779b97f4a7c15ull) ^ (i * 0xd1b54a32d192ed03ull));
        r.next_u64();
        return r;
    }

private:
    uint64_t state_;
};

inline int thread_budget() {
    if (const char* env = std::getenv("NONOSGOOD_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace nonosgood
