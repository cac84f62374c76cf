#include "romdot/rom.hpp"

#include <Eigen/SparseCholesky>

#include "romdot/krylov.hpp"

namespace romdot {

ReducedModel::ReducedModel(Mat V, const SpMat& A_star, const Mat& B_tilde, const Mat& C_tilde)
    : V_(std::move(V)) {
    E_r_ = V_.transpose() * V_;
    Eigen::LLT<Mat> llt(E_r_);
    if (llt.info() != Eigen::Success)
        throw SolverError("rom: basis is numerically rank deficient (E_r not SPD)");
    Astar_r_ = V_.transpose() * (A_star * V_);
    Astar_r_ = 0.5 * (Astar_r_ + Astar_r_.transpose());  // enforce exact symmetry
    B_r_ = V_.transpose() * B_tilde;
    C_r_ = V_.transpose() * C_tilde;
}

Mat ReducedModel::reduced_system(const Vec& mu_scaled) const {
    // V^T diag(mu) V as (row-scaled V)^T V.
    const Mat scaled = (V_.array().colwise() * mu_scaled.array()).matrix();
    Mat A_r = Astar_r_ + V_.transpose() * scaled;
    A_r = 0.5 * (A_r + A_r.transpose());
    return A_r;
}

Mat ReducedModel::transfer(const Vec& mu_scaled) const {
    const Mat A_r = reduced_system(mu_scaled);
    Eigen::LDLT<Mat> ldlt(A_r);
    if (ldlt.info() != Eigen::Success)
        throw SolverError("rom: reduced system factorization failed");
    return C_r_.transpose() * ldlt.solve(B_r_);
}

Mat ReducedModel::jacobian(const PalsModel& pals, const Vec& p, const Mat& nodes, double h2) const {
    const Vec mu_scaled = h2 * eval_absorption(pals, p, nodes);
    const Mat A_r = reduced_system(mu_scaled);
    Eigen::LDLT<Mat> ldlt(A_r);
    if (ldlt.info() != Eigen::Success)
        throw SolverError("rom: reduced system factorization failed");
    const Mat Y = ldlt.solve(B_r_);   // r x n_src
    const Mat Zc = ldlt.solve(C_r_);  // r x n_det

    const auto n_src = B_r_.cols();
    const auto n_det = C_r_.cols();
    Mat J(n_src * n_det, pals.n_params());
    for (int k = 0; k < pals.n_params(); ++k) {
        const SparseDiag delta = absorption_jacobian(pals, p, k, nodes);
        const auto s = static_cast<Eigen::Index>(delta.index.size());
        if (s == 0) {
            J.col(k).setZero();
            continue;
        }
        Mat Wy(s, n_src), Wz(s, n_det);
        for (Eigen::Index t = 0; t < s; ++t) {
            const int row = delta.index[static_cast<std::size_t>(t)];
            const double w = delta.value[static_cast<std::size_t>(t)];
            Wy.row(t) = w * (V_.row(row) * Y);
            Wz.row(t) = V_.row(row) * Zc;
        }
        const Mat M = Wz.transpose() * Wy;  // n_det x n_src
        J.col(k) = -h2 * Eigen::Map<const Vec>(M.data(), M.size());
    }
    return J;
}

namespace {

Mat solve_columns(const SchurOperator& op, const Vec& mu_scaled, const Mat& rhs, FomSolve mode,
                  double tol) {
    if (mode == FomSolve::Direct) {
        Eigen::SimplicialLDLT<SpMat> factor(op.with_absorption(mu_scaled));
        if (factor.info() != Eigen::Success)
            throw SolverError("fom: sparse factorization failed");
        return factor.solve(rhs);
    }
    const LinOp apply = [&](const Vec& v) { return op.apply(mu_scaled, v); };
    const int maxit = 2 * op.dim();
    Mat X(rhs.rows(), rhs.cols());
    for (Eigen::Index j = 0; j < rhs.cols(); ++j) {
        auto [x, report] = minres(apply, rhs.col(j), tol, maxit);
        if (!report.converged) throw SolverError("fom: MINRES did not converge");
        X.col(j) = x;
    }
    return X;
}

}  // namespace

Mat fom_transfer(const SchurOperator& op, const SourceDetectorLayout& layout, const Vec& mu_scaled,
                 FomSolve mode, double tol) {
    const Mat X = solve_columns(op, mu_scaled, layout.B_tilde, mode, tol);
    return layout.C_tilde.transpose() * X;
}

Mat jacobian_from_solutions(const Mat& X, const Mat& Z, const PalsModel& pals, const Vec& p,
                            const Mat& nodes, double h2) {
    const auto n_src = X.cols();
    const auto n_det = Z.cols();
    Mat J(n_src * n_det, pals.n_params());
    for (int k = 0; k < pals.n_params(); ++k) {
        const SparseDiag delta = absorption_jacobian(pals, p, k, nodes);
        const auto s = static_cast<Eigen::Index>(delta.index.size());
        if (s == 0) {
            J.col(k).setZero();
            continue;
        }
        Mat M = Mat::Zero(n_det, n_src);
        for (Eigen::Index t = 0; t < s; ++t) {
            const int row = delta.index[static_cast<std::size_t>(t)];
            const double w = delta.value[static_cast<std::size_t>(t)];
            M.noalias() += w * (Z.row(row).transpose() * X.row(row));
        }
        J.col(k) = -h2 * Eigen::Map<const Vec>(M.data(), M.size());
    }
    return J;
}

Mat fom_jacobian(const SchurOperator& op, const SourceDetectorLayout& layout, const PalsModel& pals,
                 const Vec& p, const Mat& nodes, double h2, FomSolve mode, double tol) {
    const Vec mu_scaled = h2 * eval_absorption(pals, p, nodes);
    const Mat X = solve_columns(op, mu_scaled, layout.B_tilde, mode, tol);
    const Mat Z = solve_columns(op, mu_scaled, layout.C_tilde, mode, tol);
    return jacobian_from_solutions(X, Z, pals, p, nodes, h2);
}

}  // namespace romdot
