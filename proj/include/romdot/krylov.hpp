#pragma once

#include <utility>
#include <vector>

#include "romdot/types.hpp"

namespace romdot {

struct SolveReport {
    int iterations = 0;
    std::vector<double> rel_residual_history;
    bool converged = false;
    double correction_norm = 0.0;
};

/// Subspace pair (U, K) with A U = K and K^T K = I.
class RecycleSpace {
  public:
    RecycleSpace() = default;

    /// Build from raw columns W and their images A W (thin QR of the images).
    static RecycleSpace from_raw(const Mat& W, const Mat& AW);

    /// Append a raw column u with image k = A u, Gram-Schmidt against K.
    /// Returns false (and leaves the space unchanged) if the image is
    /// numerically in Range(K).
    bool append(const Vec& u, const Vec& k);

    int cols() const { return static_cast<int>(K_.cols()); }
    const Mat& U() const { return U_; }
    const Mat& K() const { return K_; }

  private:
    Mat U_;
    Mat K_;
};

/// Residual-minimizing guess over Range(U): z = U K^T b, r = b - K K^T b.
std::pair<Vec, Vec> initial_guess(const RecycleSpace& rs, const Vec& b);

/// Short-recurrence MINRES for symmetric (possibly indefinite) operators.
/// Converges when ||b - A x|| / ||b|| <= tol.
std::pair<Vec, SolveReport> minres(const LinOp& apply_op, const Vec& b, double tol, int maxit);

struct RecycledResult {
    Vec correction;     // g = y_m - U K^T (A y_m), solves min over Range([U, V_m])
    Vec new_direction;  // y_m, the component outside Range(U)
    Vec image;          // A y_m, from the one extra operator application
    SolveReport report;
};

/// Deflated MINRES: Lanczos on (I - K K^T) A started from the projected rhs,
/// with each new Lanczos vector re-orthogonalized against K. Convergence is
/// measured as ||rhs - A g|| / rhs_scale, so passing the full system's ||b||
/// aligns the inner stop with the outer tolerance.
RecycledResult recycled_minres(const LinOp& apply_op, const RecycleSpace& rs, const Vec& rhs,
                               double tol, int maxit, double rhs_scale = 0.0);

/// k smallest eigenpairs of SPD sparse A via shift-invert Lanczos on A^-1
/// (sparse factorization computed once). Eigenvalues ascending; columns of U
/// orthonormal with ||A u_i - lambda_i u_i|| <= tol * lambda_max estimate.
std::pair<Vec, Mat> smallest_eigenpairs(const SpMat& A, int k, double tol = 1e-8);

}  // namespace romdot
