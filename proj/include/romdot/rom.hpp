#pragma once

#include "romdot/grid.hpp"
#include "romdot/pals.hpp"
#include "romdot/types.hpp"

namespace romdot {

enum class FomSolve { Direct, Minres };

/// One-sided projection of the Schur system onto the global basis V.
/// A~_r(p) = Astar_r + V^T diag(mu) V is assembled per call; the reduced
/// transfer function and Jacobian come from one dense factorization at order r.
class ReducedModel {
  public:
    ReducedModel(Mat V, const SpMat& A_star, const Mat& B_tilde, const Mat& C_tilde);

    int order() const { return static_cast<int>(Astar_r_.rows()); }
    const Mat& basis() const { return V_; }
    const Mat& E_r() const { return E_r_; }
    const Mat& Astar_r() const { return Astar_r_; }

    Mat reduced_system(const Vec& mu_scaled) const;

    /// Psi_r = C_r^T A~_r(p)^-1 B_r, n_det x n_src.
    Mat transfer(const Vec& mu_scaled) const;

    /// Columns vec(-C_r^T A~_r^-1 (V^T Delta_k V) A~_r^-1 B_r); Delta_k is the
    /// h^2-scaled absorption derivative, built from its compact support.
    Mat jacobian(const PalsModel& pals, const Vec& p, const Mat& nodes, double h2) const;

  private:
    Mat V_;
    Mat E_r_, Astar_r_, B_r_, C_r_;
};

/// Full-order transfer function C~^T A~(p)^-1 B~.
Mat fom_transfer(const SchurOperator& op, const SourceDetectorLayout& layout, const Vec& mu_scaled,
                 FomSolve mode = FomSolve::Direct, double tol = 1e-10);

/// Full-order Jacobian, reusing forward solutions X and adjoint solutions Z.
Mat fom_jacobian(const SchurOperator& op, const SourceDetectorLayout& layout, const PalsModel& pals,
                 const Vec& p, const Mat& nodes, double h2, FomSolve mode = FomSolve::Direct,
                 double tol = 1e-10);

/// Jacobian assembly shared by the full-order and hybrid paths: X and Z are
/// the (approximate) solutions for B~ and C~ columns.
Mat jacobian_from_solutions(const Mat& X, const Mat& Z, const PalsModel& pals, const Vec& p,
                            const Mat& nodes, double h2);

}  // namespace romdot
