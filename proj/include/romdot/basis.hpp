#pragma once

#include <cstdint>
#include <vector>

#include "romdot/grid.hpp"
#include "romdot/krylov.hpp"
#include "romdot/types.hpp"

namespace romdot {

// Column provenance markers, also used in the basis file format.
inline constexpr std::uint8_t kColEigenvector = 0;
inline constexpr std::uint8_t kColInitialSolution = 1;
inline constexpr std::uint8_t kColCorrection = 2;

struct BuildLogRow {
    int system = 0;
    int rhs = 0;
    double init_relres = 0.0;
    int iterations = 0;
    bool appended = false;
};

/// Growing global basis V with the QR factorization of its image under the
/// current system matrix: A~_i V = K_img R, with K_img orthonormal and R
/// applied only through triangular solves.
class GlobalBasis {
  public:
    GlobalBasis() = default;
    GlobalBasis(Mat V, Mat AstarV, std::vector<std::uint8_t> markers, int ku);

    int dim() const { return static_cast<int>(V_.rows()); }
    int cols() const { return static_cast<int>(V_.cols()); }
    int eig_block() const { return ku_; }

    const Mat& V() const { return V_; }
    const Mat& Astar_V() const { return AstarV_; }
    const Mat& K_img() const { return Kimg_; }
    const Mat& R() const { return R_; }
    const Mat& K_raw() const { return Ktil_; }  // A~_i V, unorthogonalized
    const std::vector<std::uint8_t>& markers() const { return markers_; }

    /// Recompute the image QR for a new diagonal update. The eigenvector block
    /// is factored first, the remainder projected against it and factored, and
    /// the two assembled blockwise.
    void refresh(const Vec& mu_scaled);

    /// Rank-one QR extension for one appended column. Astar_y avoids an extra
    /// A~_* application when the caller already has A~_i y. Returns false and
    /// drops the column if its image is numerically in Range(K_img).
    bool append(const Vec& y, const Vec& Astar_y, const Vec& mu_scaled, std::uint8_t marker);

    /// x = V R^-1 K_img^T b (triangular solve, no inverse).
    Vec solve_projected(const Vec& b) const;

    /// c = R^-1 K_img^T b, the basis coordinates of solve_projected(b).
    Vec projected_coordinates(const Vec& b) const;

  private:
    Mat V_, AstarV_, Kimg_, R_, Ktil_;
    std::vector<std::uint8_t> markers_;
    int ku_ = 0;
};

/// Column indices into V forming the per-RHS recycle spaces
/// U_j = [U_0, X_0(:,j), corrections appended while solving rhs j].
struct PerRhsSpaces {
    std::vector<std::vector<int>> cols;
};

struct InitBasisResult {
    GlobalBasis basis;
    PerRhsSpaces spaces;
    Mat X0;
    Vec eigenvalues;
    long full_solves = 0;  // interior-dimension solves spent (X0 columns)
};

/// Algorithm lines 1-3: U_0 from the k_eig smallest eigenpairs of A~_0,
/// X_0 from MINRES solves of A~_0 X_0 = B_concat, V = [U_0, X_0].
InitBasisResult init_basis(const SchurOperator& op, const Vec& mu0_scaled, const Mat& B_concat,
                           int k_eig, double tol);

/// Same seeding from precomputed U_0 / X_0 (offline reuse path).
InitBasisResult init_basis_from(const SchurOperator& op, const Mat& U0, const Mat& X0);

struct ProcessResult {
    Mat X;
    std::vector<BuildLogRow> log;
    long inner_iterations = 0;
    long appends = 0;
};

/// Algorithm main loop for one system: global residual check against V's
/// image first, deflated MINRES on the correction equation otherwise, new
/// directions appended to both V and U_j. Call refresh() is handled inside.
ProcessResult process_system(GlobalBasis& gb, PerRhsSpaces& per_rhs, const SchurOperator& op,
                             const Vec& mu_scaled, const Mat& B_concat, double tol,
                             int system_index, int maxit = 0);

/// Per-RHS-only recycling comparator: solves each system directly over
/// Range([U_j, V_m]) with no global-basis first check and no cross-RHS
/// sharing. Each U_j grows with its own corrections across systems.
class BaselinePerRhsRecycler {
  public:
    BaselinePerRhsRecycler(const SchurOperator& op, const Mat& U0, const Mat& X0);

    ProcessResult solve_system(const Vec& mu_scaled, const Mat& B_concat, double tol,
                               int system_index, int maxit = 0);

  private:
    const SchurOperator& op_;
    std::vector<Mat> W_;        // raw per-RHS columns
    std::vector<Mat> AstarW_;   // cached A~_* W_j
};

/// Least-squares coefficients c minimizing ||V c - x|| per column of X_test.
Mat basis_coefficients(const Mat& V, const Mat& X_test);

}  // namespace romdot
