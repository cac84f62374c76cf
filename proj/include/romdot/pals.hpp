#pragma once

#include <vector>

#include "romdot/types.hpp"

namespace romdot {

/// Parametric level-set absorption image built from m compactly supported
/// radial bumps. The parameter vector is p = [alpha(m), beta(m), chi(2m)]
/// with chi stored as (x_1, y_1, x_2, y_2, ...); length 4m.
struct PalsModel {
    int m_bumps = 9;
    double mu_in = 0.5;
    double mu_out = 0.05;
    double eps_heaviside = 0.05;
    double eps_norm = 4e-3;
    double level = 0.0;

    int n_params() const { return 4 * m_bumps; }
    double alpha(const Vec& p, int j) const { return p[j]; }
    double beta(const Vec& p, int j) const { return p[m_bumps + j]; }
    double chi_x(const Vec& p, int j) const { return p[2 * m_bumps + 2 * j]; }
    double chi_y(const Vec& p, int j) const { return p[2 * m_bumps + 2 * j + 1]; }
};

/// Wendland C2 bump psi(r) = (1-r)^4 (4r+1) for r in [0,1), else 0.
double wendland_c2(double r);
double wendland_c2_deriv(double r);

/// Level-set field phi over the given nodes (one row per node, columns x,y).
Vec eval_levelset(const PalsModel& model, const Vec& p, const Mat& nodes);

/// mu = mu_out + (mu_in - mu_out) H_eps(phi - c), entries in [min,max] of the
/// two absorption levels.
Vec eval_absorption(const PalsModel& model, const Vec& p, const Mat& nodes);

/// Sparse diagonal d mu / d p_k, restricted to the support of the owning bump.
struct SparseDiag {
    std::vector<int> index;
    std::vector<double> value;

    Vec dense(int n) const {
        Vec v = Vec::Zero(n);
        for (std::size_t t = 0; t < index.size(); ++t) v[index[t]] = value[t];
        return v;
    }
};

SparseDiag absorption_jacobian(const PalsModel& model, const Vec& p, int k, const Mat& nodes);

}  // namespace romdot
