#include "romdot/basis.hpp"

#include <cmath>
#include <utility>

namespace romdot {

namespace {

Mat gather_columns(const Mat& M, const std::vector<int>& idx) {
    Mat out(M.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t t = 0; t < idx.size(); ++t) out.col(static_cast<Eigen::Index>(t)) = M.col(idx[t]);
    return out;
}

std::pair<Mat, Mat> thin_qr(const Mat& M) {
    Eigen::HouseholderQR<Mat> qr(M);
    const auto cols = M.cols();
    Mat Q = qr.householderQ() * Mat::Identity(M.rows(), cols);
    Mat R = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    return {std::move(Q), std::move(R)};
}

// Stored solutions are solved a bit past the outer check tolerance, so their
// residual floor does not mask the global check for rhs/system pairs whose
// correction is already represented in V.
constexpr double kInnerSafety = 0.25;

}  // namespace

GlobalBasis::GlobalBasis(Mat V, Mat AstarV, std::vector<std::uint8_t> markers, int ku)
    : V_(std::move(V)), AstarV_(std::move(AstarV)), markers_(std::move(markers)), ku_(ku) {
    if (V_.cols() != AstarV_.cols() || static_cast<std::size_t>(V_.cols()) != markers_.size())
        throw ConfigError("basis: inconsistent column counts");
}

void GlobalBasis::refresh(const Vec& mu_scaled) {
    while (true) {
        const auto r = V_.cols();
        Ktil_ = AstarV_ + (V_.array().colwise() * mu_scaled.array()).matrix();

        const auto a = std::min<Eigen::Index>(ku_, r);
        auto [Qa, Ra] = thin_qr(Ktil_.leftCols(a));
        Kimg_.resize(V_.rows(), r);
        R_ = Mat::Zero(r, r);
        Kimg_.leftCols(a) = Qa;
        R_.topLeftCorner(a, a) = Ra;

        int deficient = -1;
        if (r > a) {
            const Mat B = Ktil_.rightCols(r - a);
            const Mat C = Qa.transpose() * B;
            auto [Qb, Rb] = thin_qr(B - Qa * C);
            Kimg_.rightCols(r - a) = Qb;
            R_.topRightCorner(a, r - a) = C;
            R_.bottomRightCorner(r - a, r - a) = Rb;
            for (Eigen::Index i = a; i < r; ++i)
                if (std::abs(R_(i, i)) <= 1e-12 * Ktil_.col(i).norm()) {
                    deficient = static_cast<int>(i);
                    break;
                }
        }
        if (deficient < 0) return;

        // Numerically rank-deficient column: drop it and refactor.
        const auto last = r - 1;
        for (Eigen::Index c = deficient; c < last; ++c) {
            V_.col(c) = V_.col(c + 1);
            AstarV_.col(c) = AstarV_.col(c + 1);
            markers_[static_cast<std::size_t>(c)] = markers_[static_cast<std::size_t>(c + 1)];
        }
        V_.conservativeResize(Eigen::NoChange, last);
        AstarV_.conservativeResize(Eigen::NoChange, last);
        markers_.pop_back();
    }
}

bool GlobalBasis::append(const Vec& y, const Vec& Astar_y, const Vec& mu_scaled, std::uint8_t marker) {
    const Vec z = Astar_y + mu_scaled.cwiseProduct(y);
    Vec c = Kimg_.transpose() * z;
    Vec q = z - Kimg_ * c;
    const Vec c2 = Kimg_.transpose() * q;
    q -= Kimg_ * c2;
    c += c2;
    const double rho = q.norm();
    if (rho <= 1e-12 * z.norm()) return false;

    const auto r = V_.cols();
    V_.conservativeResize(Eigen::NoChange, r + 1);
    V_.col(r) = y;
    AstarV_.conservativeResize(Eigen::NoChange, r + 1);
    AstarV_.col(r) = Astar_y;
    Ktil_.conservativeResize(Eigen::NoChange, r + 1);
    Ktil_.col(r) = z;
    Kimg_.conservativeResize(Eigen::NoChange, r + 1);
    Kimg_.col(r) = q / rho;
    R_.conservativeResize(r + 1, r + 1);
    R_.col(r).head(r) = c;
    R_.row(r).head(r).setZero();
    R_(r, r) = rho;
    markers_.push_back(marker);
    return true;
}

Vec GlobalBasis::projected_coordinates(const Vec& b) const {
    const Vec w = Kimg_.transpose() * b;
    return R_.triangularView<Eigen::Upper>().solve(w);
}

Vec GlobalBasis::solve_projected(const Vec& b) const {
    return V_ * projected_coordinates(b);
}

InitBasisResult init_basis_from(const SchurOperator& op, const Mat& U0, const Mat& X0) {
    InitBasisResult result;
    const auto n = U0.rows();
    const auto ku = U0.cols();
    const auto nrhs = X0.cols();
    Mat V(n, ku + nrhs);
    V << U0, X0;
    const Mat AstarV = op.matrix() * V;
    std::vector<std::uint8_t> markers(static_cast<std::size_t>(ku), kColEigenvector);
    markers.insert(markers.end(), static_cast<std::size_t>(nrhs), kColInitialSolution);
    result.basis = GlobalBasis(std::move(V), AstarV, std::move(markers), static_cast<int>(ku));

    result.spaces.cols.resize(static_cast<std::size_t>(nrhs));
    for (Eigen::Index j = 0; j < nrhs; ++j) {
        auto& cols = result.spaces.cols[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < ku; ++i) cols.push_back(static_cast<int>(i));
        cols.push_back(static_cast<int>(ku + j));
    }
    result.X0 = X0;
    return result;
}

InitBasisResult init_basis(const SchurOperator& op, const Vec& mu0_scaled, const Mat& B_concat,
                           int k_eig, double tol) {
    const SpMat A0 = op.with_absorption(mu0_scaled);
    auto [eigvals, U0] = smallest_eigenpairs(A0, k_eig, std::min(tol, 1e-8));

    const LinOp apply = [&](const Vec& v) { return op.apply(mu0_scaled, v); };
    const int maxit = 2 * op.dim();
    Mat X0(op.dim(), B_concat.cols());
    for (Eigen::Index j = 0; j < B_concat.cols(); ++j) {
        auto [x, report] = minres(apply, B_concat.col(j), kInnerSafety * tol, maxit);
        if (!report.converged)
            throw SolverError("init_basis: MINRES failed on initial solution column " + std::to_string(j));
        X0.col(j) = x;
    }

    InitBasisResult result = init_basis_from(op, U0, X0);
    result.eigenvalues = eigvals;
    result.full_solves = B_concat.cols();
    return result;
}

ProcessResult process_system(GlobalBasis& gb, PerRhsSpaces& per_rhs, const SchurOperator& op,
                             const Vec& mu_scaled, const Mat& B_concat, double tol,
                             int system_index, int maxit) {
    if (maxit <= 0) maxit = 2 * op.dim();
    gb.refresh(mu_scaled);

    const LinOp apply = [&](const Vec& v) { return op.apply(mu_scaled, v); };
    const auto nrhs = B_concat.cols();
    ProcessResult result;
    result.X.resize(op.dim(), nrhs);

    for (Eigen::Index j = 0; j < nrhs; ++j) {
        const Vec bj = B_concat.col(j);
        const double bnorm = bj.norm();
        const Vec w = gb.K_img().transpose() * bj;
        const Vec rj = bj - gb.K_img() * w;

        BuildLogRow row;
        row.system = system_index;
        row.rhs = static_cast<int>(j);
        row.init_relres = rj.norm() / bnorm;

        if (row.init_relres <= tol) {
            result.X.col(j) = gb.solve_projected(bj);
        } else {
            auto& idx = per_rhs.cols[static_cast<std::size_t>(j)];
            // Images A~_i V were already formed during the refresh; the
            // per-RHS QR just factors the selected columns.
            const Mat W = gather_columns(gb.V(), idx);
            const Mat KtilJ = gather_columns(gb.K_raw(), idx);
            const RecycleSpace rsj = RecycleSpace::from_raw(W, KtilJ);

            auto solved = recycled_minres(apply, rsj, rj, kInnerSafety * tol, maxit, bnorm);
            if (!solved.report.converged)
                throw SolverError("process_system: correction solve failed at system " +
                                  std::to_string(system_index) + ", rhs " + std::to_string(j));
            result.X.col(j) = solved.correction + gb.solve_projected(bj);
            row.iterations = solved.report.iterations;
            result.inner_iterations += row.iterations;

            const Vec Astar_y = solved.image - mu_scaled.cwiseProduct(solved.new_direction);
            if (gb.append(solved.new_direction, Astar_y, mu_scaled, kColCorrection)) {
                idx.push_back(gb.cols() - 1);
                row.appended = true;
                ++result.appends;
            }
        }
        result.log.push_back(row);
    }
    return result;
}

BaselinePerRhsRecycler::BaselinePerRhsRecycler(const SchurOperator& op, const Mat& U0, const Mat& X0)
    : op_(op) {
    const auto nrhs = X0.cols();
    W_.reserve(static_cast<std::size_t>(nrhs));
    AstarW_.reserve(static_cast<std::size_t>(nrhs));
    for (Eigen::Index j = 0; j < nrhs; ++j) {
        Mat W(U0.rows(), U0.cols() + 1);
        W << U0, X0.col(j);
        AstarW_.push_back(op.matrix() * W);
        W_.push_back(std::move(W));
    }
}

ProcessResult BaselinePerRhsRecycler::solve_system(const Vec& mu_scaled, const Mat& B_concat,
                                                   double tol, int system_index, int maxit) {
    if (maxit <= 0) maxit = 2 * op_.dim();
    const LinOp apply = [&](const Vec& v) { return op_.apply(mu_scaled, v); };
    const auto nrhs = B_concat.cols();
    ProcessResult result;
    result.X.resize(op_.dim(), nrhs);

    for (Eigen::Index j = 0; j < nrhs; ++j) {
        auto& W = W_[static_cast<std::size_t>(j)];
        auto& AW = AstarW_[static_cast<std::size_t>(j)];
        const Mat KtilJ = AW + (W.array().colwise() * mu_scaled.array()).matrix();
        const RecycleSpace rsj = RecycleSpace::from_raw(W, KtilJ);

        const Vec bj = B_concat.col(j);
        const double bnorm = bj.norm();
        auto [z0, rj] = initial_guess(rsj, bj);

        BuildLogRow row;
        row.system = system_index;
        row.rhs = static_cast<int>(j);
        row.init_relres = rj.norm() / bnorm;

        if (row.init_relres <= tol) {
            result.X.col(j) = z0;
        } else {
            auto solved = recycled_minres(apply, rsj, rj, tol, maxit, bnorm);
            if (!solved.report.converged)
                throw SolverError("baseline recycling: solve failed at system " +
                                  std::to_string(system_index) + ", rhs " + std::to_string(j));
            result.X.col(j) = z0 + solved.correction;
            row.iterations = solved.report.iterations;
            result.inner_iterations += row.iterations;

            W.conservativeResize(Eigen::NoChange, W.cols() + 1);
            W.col(W.cols() - 1) = solved.new_direction;
            AW.conservativeResize(Eigen::NoChange, AW.cols() + 1);
            AW.col(AW.cols() - 1) = solved.image - mu_scaled.cwiseProduct(solved.new_direction);
            row.appended = true;
            ++result.appends;
        }
        result.log.push_back(row);
    }
    return result;
}

Mat basis_coefficients(const Mat& V, const Mat& X_test) {
    if (V.rows() != X_test.rows())
        throw ConfigError("basis_coefficients: dimension mismatch");
    Eigen::ColPivHouseholderQR<Mat> qr(V);
    Mat C(V.cols(), X_test.cols());
    for (Eigen::Index j = 0; j < X_test.cols(); ++j) C.col(j) = qr.solve(X_test.col(j));
    return C;
}

}  // namespace romdot
