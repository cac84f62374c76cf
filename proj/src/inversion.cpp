#include "romdot/inversion.hpp"

#include <cmath>

namespace romdot {

namespace {

Vec clamp_dilations(const PalsModel& pals, Vec p) {
    for (int j = 0; j < pals.m_bumps; ++j) {
        double& beta = p[pals.m_bumps + j];
        if (beta < 1e-6) beta = 1e-6;
    }
    return p;
}

}  // namespace

FomEvaluator::FomEvaluator(ForwardSetup setup) : s_(std::move(setup)) {}

Mat FomEvaluator::transfer(const Vec& p) {
    ++function_evals;
    const Vec pc = clamp_dilations(*s_.pals, p);
    const Vec mu = s_.h2 * eval_absorption(*s_.pals, pc, s_.nodes);
    full_order_solves += s_.layout->n_src;
    return fom_transfer(*s_.op, *s_.layout, mu, s_.solve_mode, s_.solver_tol);
}

Mat FomEvaluator::jacobian(const Vec& p) {
    ++jacobian_evals;
    const Vec pc = clamp_dilations(*s_.pals, p);
    full_order_solves += s_.layout->n_src + s_.layout->n_det;
    return fom_jacobian(*s_.op, *s_.layout, *s_.pals, pc, s_.nodes, s_.h2, s_.solve_mode,
                        s_.solver_tol);
}

RomEvaluator::RomEvaluator(ForwardSetup setup, std::shared_ptr<const ReducedModel> model)
    : s_(std::move(setup)), model_(std::move(model)) {}

Mat RomEvaluator::transfer(const Vec& p) {
    ++function_evals;
    const Vec pc = clamp_dilations(*s_.pals, p);
    const Vec mu = s_.h2 * eval_absorption(*s_.pals, pc, s_.nodes);
    return model_->transfer(mu);
}

Mat RomEvaluator::jacobian(const Vec& p) {
    ++jacobian_evals;
    const Vec pc = clamp_dilations(*s_.pals, p);
    return model_->jacobian(*s_.pals, pc, s_.nodes, s_.h2);
}

HybridEvaluator::HybridEvaluator(ForwardSetup setup, InitBasisResult init, const Vec& p0,
                                 int k_systems, double tol_basis)
    : s_(std::move(setup)),
      basis_(std::move(init.basis)),
      spaces_(std::move(init.spaces)),
      p0_(clamp_dilations(*s_.pals, p0)),
      k_systems_(k_systems),
      tol_basis_(tol_basis) {
    full_order_solves += init.full_solves;
    cached_p_ = p0_;
    cached_X_ = std::move(init.X0);
    visited_.push_back(p0_);
}

const Mat& HybridEvaluator::solutions_for(const Vec& p) {
    if (cached_p_ && cached_p_->size() == p.size() && *cached_p_ == p) return cached_X_;
    if (systems_used_ >= k_systems_)
        throw SolverError("hybrid: full-order solutions requested after ROM switch");
    const Vec mu = s_.h2 * eval_absorption(*s_.pals, p, s_.nodes);
    ++systems_used_;
    auto pr = process_system(basis_, spaces_, *s_.op, mu, s_.layout->B_concat, tol_basis_,
                             systems_used_);
    log_.insert(log_.end(), pr.log.begin(), pr.log.end());
    appends_ += pr.appends;
    full_order_solves += pr.appends;  // one iterative full-order solve per correction
    cached_p_ = p;
    cached_X_ = std::move(pr.X);
    visited_.push_back(p);
    return cached_X_;
}

Mat HybridEvaluator::transfer(const Vec& p) {
    ++function_evals;
    const Vec pc = clamp_dilations(*s_.pals, p);
    const bool known = cached_p_ && cached_p_->size() == pc.size() && *cached_p_ == pc;
    if (!rom_ && !known && systems_used_ >= k_systems_)
        rom_ = std::make_shared<ReducedModel>(basis_.V(), s_.op->matrix(), s_.layout->B_tilde,
                                              s_.layout->C_tilde);
    if (rom_) {
        const Vec mu = s_.h2 * eval_absorption(*s_.pals, pc, s_.nodes);
        return rom_->transfer(mu);
    }
    const Mat& X = solutions_for(pc);
    return s_.layout->C_tilde.transpose() * X.leftCols(s_.layout->n_src);
}

Mat HybridEvaluator::jacobian(const Vec& p) {
    ++jacobian_evals;
    const Vec pc = clamp_dilations(*s_.pals, p);
    if (rom_) return rom_->jacobian(*s_.pals, pc, s_.nodes, s_.h2);
    const Mat& X = solutions_for(pc);
    return jacobian_from_solutions(X.leftCols(s_.layout->n_src), X.rightCols(s_.layout->n_det),
                                   *s_.pals, pc, s_.nodes, s_.h2);
}

Vec residual(ForwardEvaluator& eval, const Vec& p, const Vec& data) {
    const Mat psi = eval.transfer(p);
    if (psi.size() != data.size())
        throw ConfigError("residual: data length does not match n_det * n_src");
    return Eigen::Map<const Vec>(psi.data(), psi.size()) - data;
}

namespace {

Vec dogleg_step(const Vec& g, const Mat& B, double radius) {
    // Gauss-Newton point, with a tiny shift if B is numerically singular.
    Mat Breg = B;
    const double shift = 1e-12 * (B.diagonal().maxCoeff() + 1.0);
    Breg.diagonal().array() += shift;
    Eigen::LDLT<Mat> ldlt(Breg);
    const Vec p_gn = -ldlt.solve(g);
    if (p_gn.norm() <= radius && ldlt.info() == Eigen::Success) return p_gn;

    const double gBg = g.dot(B * g);
    if (gBg <= 0.0) return -(radius / g.norm()) * g;
    const Vec p_cauchy = -(g.squaredNorm() / gBg) * g;
    if (p_cauchy.norm() >= radius) return (radius / p_cauchy.norm()) * p_cauchy;

    // Intersection of the dogleg segment with the trust-region boundary.
    const Vec d = p_gn - p_cauchy;
    const double a = d.squaredNorm();
    const double b = 2.0 * p_cauchy.dot(d);
    const double c = p_cauchy.squaredNorm() - radius * radius;
    const double tau = (-b + std::sqrt(std::max(0.0, b * b - 4.0 * a * c))) / (2.0 * a);
    return p_cauchy + tau * d;
}

}  // namespace

InverseResult solve_inverse(ForwardEvaluator& eval, const InverseProblem& problem,
                            const TrustRegionOptions& options) {
    InverseResult result;
    const double target = 1.1 * problem.noise_norm;

    Vec p = clamp_dilations(*problem.pals, problem.p0);
    Vec res = residual(eval, p, problem.data);
    double f = res.norm();
    const double f0 = f;
    double radius = options.initial_radius;

    result.trace.push_back({0, f, radius, 0.0, true, eval.function_evals, eval.jacobian_evals});
    if (f <= target) {
        result.p = p;
        result.converged = true;
        result.final_residual = f;
        result.function_evals = eval.function_evals;
        result.jacobian_evals = eval.jacobian_evals;
        return result;
    }

    Mat J = eval.jacobian(p);
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        const Vec g = J.transpose() * res;
        if (g.lpNorm<Eigen::Infinity>() <= options.gradient_tol) break;
        const Mat B = J.transpose() * J;

        const Vec s = dogleg_step(g, B, radius);
        const double step_norm = s.norm();
        if (step_norm <= options.step_tol * (1.0 + p.norm())) break;

        const Vec p_trial = clamp_dilations(*problem.pals, p + s);
        const Vec res_trial = residual(eval, p_trial, problem.data);
        const double f_trial = res_trial.norm();

        const double predicted = -(g.dot(s) + 0.5 * s.dot(B * s));
        const double actual = 0.5 * (f * f - f_trial * f_trial);
        const double rho = predicted > 0.0 ? actual / predicted : -1.0;

        if (rho < options.shrink_threshold) {
            radius = 0.25 * step_norm;
        } else if (rho > options.grow_threshold && step_norm >= 0.99 * radius) {
            radius = std::min(2.0 * radius, options.max_radius);
        }

        const bool accepted = rho > 1e-4 && f_trial < f;
        if (accepted) {
            p = p_trial;
            res = res_trial;
            f = f_trial;
        }
        result.trace.push_back(
            {iter, f, radius, step_norm, accepted, eval.function_evals, eval.jacobian_evals});

        if (f <= target) {
            result.converged = true;
            break;
        }
        if (f > 1e6 * f0) break;  // divergence
        if (radius < 1e-14 * (1.0 + p.norm())) break;
        if (accepted) J = eval.jacobian(p);
    }

    result.p = p;
    result.final_residual = f;
    result.function_evals = eval.function_evals;
    result.jacobian_evals = eval.jacobian_evals;
    return result;
}

}  // namespace romdot
