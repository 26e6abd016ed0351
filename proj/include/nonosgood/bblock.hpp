#pragma once

#include "nonosgood/common.hpp"

namespace nonosgood::bblock {

/// Smooth transition profile: 1 on [-1/4,1/4], 0 outside (-3/8,3/8).
double bump(double s);
double bump_d1(double s);
double bump_d2(double s);

/// Divergence-free field equal to e on Q/2 and 0 outside (3/4)Q, built from
/// the stream-style potential psi(x) = (et.x) prod_i g(x_i).
class BuildingBlock {
public:
    explicit BuildingBlock(const Vec& e);

    const Vec& direction() const { return e_; }
    const Vec& orthogonal() const { return et_; }

    Vec eval(const Vec& x) const;
    /// Analytic Jacobian, row-major J[i*d+j] = d u_i / d x_j.
    void eval_grad(const Vec& x, double* J) const;

    /// Measured sup |grad u| / |e|, cached per dimension.
    static double c1_constant(int d);

private:
    Vec e_, et_;
    int d_;
};

inline BuildingBlock make_block(const Vec& e) { return BuildingBlock(e); }

}  // namespace nonosgood::bblock
