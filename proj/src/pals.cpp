#include "romdot/pals.hpp"

#include <cmath>

namespace romdot {

namespace {

constexpr double kPi = 3.14159265358979323846;

double smooth_heaviside(double t, double eps) {
    return 0.5 * (1.0 + (2.0 / kPi) * std::atan(t / eps));
}

double smooth_delta(double t, double eps) {
    return eps / (kPi * (t * t + eps * eps));
}

double pseudo_norm(double beta, double dx, double dy, double eps) {
    return std::sqrt(beta * beta * (dx * dx + dy * dy) + eps * eps);
}

void check_betas(const PalsModel& model, const Vec& p) {
    if (p.size() != model.n_params())
        throw ConfigError("pals: parameter vector has wrong length");
    for (int j = 0; j < model.m_bumps; ++j)
        if (model.beta(p, j) <= 0.0)
            throw ConfigError("pals: dilation beta must be positive");
}

}  // namespace

double wendland_c2(double r) {
    if (r >= 1.0) return 0.0;
    const double t = 1.0 - r;
    const double t2 = t * t;
    return t2 * t2 * (4.0 * r + 1.0);
}

double wendland_c2_deriv(double r) {
    if (r >= 1.0) return 0.0;
    const double t = 1.0 - r;
    return -20.0 * r * t * t * t;
}

Vec eval_levelset(const PalsModel& model, const Vec& p, const Mat& nodes) {
    check_betas(model, p);
    const int n = static_cast<int>(nodes.rows());
    Vec phi = Vec::Zero(n);
    for (int j = 0; j < model.m_bumps; ++j) {
        const double a = model.alpha(p, j);
        if (a == 0.0) continue;
        const double b = model.beta(p, j);
        const double cx = model.chi_x(p, j);
        const double cy = model.chi_y(p, j);
        for (int i = 0; i < n; ++i) {
            const double r = pseudo_norm(b, nodes(i, 0) - cx, nodes(i, 1) - cy, model.eps_norm);
            if (r < 1.0) phi[i] += a * wendland_c2(r);
        }
    }
    return phi;
}

Vec eval_absorption(const PalsModel& model, const Vec& p, const Mat& nodes) {
    if (model.mu_in < 0.0 || model.mu_out < 0.0)
        throw ConfigError("pals: absorption levels must be nonnegative");
    const Vec phi = eval_levelset(model, p, nodes);
    Vec mu(phi.size());
    for (int i = 0; i < phi.size(); ++i)
        mu[i] = model.mu_out +
                (model.mu_in - model.mu_out) * smooth_heaviside(phi[i] - model.level, model.eps_heaviside);
    return mu;
}

SparseDiag absorption_jacobian(const PalsModel& model, const Vec& p, int k, const Mat& nodes) {
    check_betas(model, p);
    if (k < 0 || k >= model.n_params())
        throw ConfigError("pals: parameter index out of range");

    const int m = model.m_bumps;
    // Which bump owns parameter k, and which coordinate it is.
    enum class Kind { Alpha, Beta, ChiX, ChiY } kind;
    int j;
    if (k < m) {
        kind = Kind::Alpha;
        j = k;
    } else if (k < 2 * m) {
        kind = Kind::Beta;
        j = k - m;
    } else {
        j = (k - 2 * m) / 2;
        kind = ((k - 2 * m) % 2 == 0) ? Kind::ChiX : Kind::ChiY;
    }

    const double a = model.alpha(p, j);
    const double b = model.beta(p, j);
    const double cx = model.chi_x(p, j);
    const double cy = model.chi_y(p, j);
    const double contrast = model.mu_in - model.mu_out;

    const Vec phi = eval_levelset(model, p, nodes);
    SparseDiag delta;
    for (int i = 0; i < nodes.rows(); ++i) {
        const double dx = nodes(i, 0) - cx;
        const double dy = nodes(i, 1) - cy;
        const double r = pseudo_norm(b, dx, dy, model.eps_norm);
        if (r >= 1.0) continue;
        double dphi;
        switch (kind) {
            case Kind::Alpha:
                dphi = wendland_c2(r);
                break;
            case Kind::Beta:
                dphi = a * wendland_c2_deriv(r) * b * (dx * dx + dy * dy) / r;
                break;
            case Kind::ChiX:
                dphi = a * wendland_c2_deriv(r) * (-b * b * dx) / r;
                break;
            case Kind::ChiY:
                dphi = a * wendland_c2_deriv(r) * (-b * b * dy) / r;
                break;
        }
        delta.index.push_back(i);
        delta.value.push_back(contrast * smooth_delta(phi[i] - model.level, model.eps_heaviside) * dphi);
    }
    return delta;
}

}  // namespace romdot
