#include "romdot/krylov.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <random>

namespace romdot {

namespace {

using Orthogonalizer = std::function<void(Vec&)>;

// Paige-Saunders MINRES: Lanczos with an incrementally updated Givens QR of
// the tridiagonal, solution built from a three-term direction recurrence.
std::pair<Vec, SolveReport> minres_core(const LinOp& op, const Vec& b, double tol, int maxit,
                                        double b_scale, const Orthogonalizer& reorth) {
    const auto n = b.size();
    Vec x = Vec::Zero(n);
    SolveReport report;

    const double beta1 = b.norm();
    const double scale = b_scale > 0.0 ? b_scale : beta1;
    if (beta1 == 0.0 || scale == 0.0) {
        report.converged = true;
        report.rel_residual_history.push_back(0.0);
        return {x, report};
    }

    double relres = beta1 / scale;
    report.rel_residual_history.push_back(relres);
    if (relres <= tol) {
        report.converged = true;
        return {x, report};
    }

    Vec v = b / beta1;
    Vec v_old = Vec::Zero(n);
    Vec d_old = Vec::Zero(n), d_oold = Vec::Zero(n);
    double c_old2 = 1.0, s_old2 = 0.0, c_old = 1.0, s_old = 0.0;
    double phibar = beta1;
    double beta = 0.0;

    double best = relres;
    int stagnant = 0;

    for (int k = 1; k <= maxit; ++k) {
        Vec p = op(v);
        const double alpha = v.dot(p);
        p -= alpha * v + beta * v_old;
        if (reorth) reorth(p);
        const double beta_next = p.norm();

        const double eps = s_old2 * beta;
        const double delta_bar = c_old2 * beta;
        const double delta = c_old * delta_bar + s_old * alpha;
        const double gamma_bar = -s_old * delta_bar + c_old * alpha;
        const double gamma = std::hypot(gamma_bar, beta_next);
        if (gamma == 0.0) break;  // operator singular on this Krylov space
        const double c = gamma_bar / gamma;
        const double s = beta_next / gamma;

        const Vec d_new = (v - delta * d_old - eps * d_oold) / gamma;
        x += (c * phibar) * d_new;
        phibar = -s * phibar;

        relres = std::abs(phibar) / scale;
        report.iterations = k;
        report.rel_residual_history.push_back(relres);
        if (!std::isfinite(relres)) {
            report.converged = false;  // NaN breakdown
            break;
        }
        if (relres <= tol) {
            report.converged = true;
            break;
        }
        if (relres < best * (1.0 - 1e-12)) {
            best = relres;
            stagnant = 0;
        } else if (++stagnant >= 50) {
            break;
        }
        if (beta_next <= 1e-300) break;  // Krylov space exhausted

        v_old = v;
        v = p / beta_next;
        beta = beta_next;
        d_oold = d_old;
        d_old = d_new;
        c_old2 = c_old;
        s_old2 = s_old;
        c_old = c;
        s_old = s;
    }
    return {x, report};
}

}  // namespace

std::pair<Vec, SolveReport> minres(const LinOp& apply_op, const Vec& b, double tol, int maxit) {
    return minres_core(apply_op, b, tol, maxit, 0.0, nullptr);
}

RecycleSpace RecycleSpace::from_raw(const Mat& W, const Mat& AW) {
    RecycleSpace rs;
    if (W.cols() == 0) return rs;
    Eigen::HouseholderQR<Mat> qr(AW);
    const auto cols = W.cols();
    Mat R = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    rs.K_ = qr.householderQ() * Mat::Identity(W.rows(), cols);
    rs.U_ = R.transpose().triangularView<Eigen::Lower>().solve(W.transpose()).transpose();
    return rs;
}

bool RecycleSpace::append(const Vec& u, const Vec& k) {
    if (K_.cols() == 0) {
        const double rho = k.norm();
        if (rho <= 1e-300) return false;
        K_ = k / rho;
        U_ = u / rho;
        return true;
    }
    Vec c = K_.transpose() * k;
    Vec q = k - K_ * c;
    const Vec c2 = K_.transpose() * q;  // second Gram-Schmidt pass
    q -= K_ * c2;
    c += c2;
    const double rho = q.norm();
    if (rho <= 1e-12 * k.norm()) return false;

    const Vec u_new = (u - U_ * c) / rho;
    U_.conservativeResize(Eigen::NoChange, U_.cols() + 1);
    U_.col(U_.cols() - 1) = u_new;
    K_.conservativeResize(Eigen::NoChange, K_.cols() + 1);
    K_.col(K_.cols() - 1) = q / rho;
    return true;
}

std::pair<Vec, Vec> initial_guess(const RecycleSpace& rs, const Vec& b) {
    if (rs.cols() == 0) return {Vec::Zero(b.size()), b};
    const Vec c = rs.K().transpose() * b;
    return {rs.U() * c, b - rs.K() * c};
}

RecycledResult recycled_minres(const LinOp& apply_op, const RecycleSpace& rs, const Vec& rhs,
                               double tol, int maxit, double rhs_scale) {
    const Mat& K = rs.K();
    const Mat& U = rs.U();
    const bool deflated = rs.cols() > 0;

    const auto project = [&](Vec& w) {
        if (deflated) w -= K * (K.transpose() * w);
    };

    Vec r0 = rhs;
    project(r0);
    const double scale = rhs_scale > 0.0 ? rhs_scale : rhs.norm();

    const LinOp op = [&](const Vec& v) {
        Vec w = apply_op(v);
        project(w);
        return w;
    };
    auto [y_m, report] = minres_core(op, r0, tol, maxit, scale, project);

    RecycledResult result;
    result.new_direction = std::move(y_m);
    result.image = apply_op(result.new_direction);
    if (deflated && result.new_direction.norm() > 0.0) {
        result.correction = result.new_direction - U * (K.transpose() * result.image);
    } else {
        result.correction = result.new_direction;
    }
    report.correction_norm = result.correction.norm();
    result.report = std::move(report);
    return result;
}

std::pair<Vec, Mat> smallest_eigenpairs(const SpMat& A, int k, double tol) {
    const int n = static_cast<int>(A.rows());
    if (k < 1 || k > n) throw ConfigError("eigensolver: k out of range");

    Eigen::SimplicialLDLT<SpMat> factor(A);
    if (factor.info() != Eigen::Success)
        throw SolverError("eigensolver: factorization of A failed (not SPD?)");

    // Gershgorin bound on lambda_max, used as the residual scale.
    double lam_max = 0.0;
    for (int c = 0; c < A.outerSize(); ++c) {
        double row_sum = 0.0;
        for (SpMat::InnerIterator it(A, c); it; ++it) row_sum += std::abs(it.value());
        lam_max = std::max(lam_max, row_sum);
    }

    // Shift-invert Lanczos on A^-1 with full reorthogonalization. The largest
    // Ritz values of A^-1 converge first, i.e. the smallest eigenvalues of A.
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> gauss;
    const auto random_vec = [&]() {
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = gauss(rng);
        return v;
    };

    Mat V(n, std::min(n, std::max(2 * k + 30, 60)));
    std::vector<double> alphas, betas;
    Vec v = random_vec();
    v.normalize();
    V.col(0) = v;
    int m = 0;

    const auto ritz_converged = [&](Vec& lambda_out, Mat& U_out) {
        if (m < k) return false;
        Mat T = Mat::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = alphas[i];
            if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = betas[i];
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(T);
        // Largest Ritz values of A^-1 -> smallest eigenvalues of A.
        Mat U(n, k);
        Vec lambda(k);
        // The i-th largest Ritz value of A^-1 is the i-th smallest of A.
        for (int i = 0; i < k; ++i) {
            const Vec y = V.leftCols(m) * es.eigenvectors().col(m - 1 - i);
            U.col(i) = y.normalized();
        }
        for (int i = 0; i < k; ++i) {
            const Vec Au = A * U.col(i);
            lambda[i] = U.col(i).dot(Au);
            if ((Au - lambda[i] * U.col(i)).norm() > tol * lam_max) return false;
        }
        lambda_out = lambda;
        U_out = U;
        return true;
    };

    Vec lambda_out;
    Mat U_out;
    const int check_every = std::max(k, 10);
    while (m < n) {
        if (V.cols() == m) V.conservativeResize(Eigen::NoChange, std::min(n, 2 * m));
        Vec w = factor.solve(V.col(m));
        const double alpha = V.col(m).dot(w);
        w -= alpha * V.col(m);
        if (m > 0) w -= betas[m - 1] * V.col(m - 1);
        // full reorthogonalization, two passes
        for (int pass = 0; pass < 2; ++pass)
            w -= V.leftCols(m + 1) * (V.leftCols(m + 1).transpose() * w);
        alphas.push_back(alpha);
        ++m;

        double beta = w.norm();
        if (beta <= 1e-13 * std::abs(alpha)) {
            if (m >= n) {
                betas.push_back(0.0);
                break;
            }
            w = random_vec();
            for (int pass = 0; pass < 2; ++pass)
                w -= V.leftCols(m) * (V.leftCols(m).transpose() * w);
            beta = 0.0;
            w.normalize();
        } else {
            w /= beta;
        }
        if (m < n) {
            betas.push_back(beta);
            if (V.cols() == m) V.conservativeResize(Eigen::NoChange, std::min(n, 2 * m));
            V.col(m) = w;
        }

        if ((m % check_every == 0 || m == n) && ritz_converged(lambda_out, U_out))
            return {lambda_out, U_out};
    }
    if (ritz_converged(lambda_out, U_out)) return {lambda_out, U_out};
    throw SolverError("eigensolver: Lanczos did not converge");
}

}  // namespace romdot
