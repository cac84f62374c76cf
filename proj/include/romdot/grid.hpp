#pragma once

#include <vector>

#include "romdot/types.hpp"

namespace romdot {

/// Rectangular slab [a1,b1] x [a3,b3] with Robin top/bottom boundaries and
/// homogeneous Dirichlet left/right sides (imposed through ghost nodes so all
/// nx columns stay in the interior block).
struct GridConfig {
    int nx = 41;
    int ny = 41;
    double a1 = 0.0;
    double b1 = 4.0;
    double a3 = 0.0;
    double b3 = 4.0;
    double diffusion = 0.3;          // constant diffusion coefficient
    double boundary_constant = 1.0;  // Robin reflection constant
    double speed = 1.0;              // carried for completeness; unused at zero frequency

    double spacing() const { return (b1 - a1) / (nx - 1); }
    void validate() const;
};

class Grid {
  public:
    explicit Grid(GridConfig cfg);

    const GridConfig& config() const { return cfg_; }
    int nx() const { return cfg_.nx; }
    int ny() const { return cfg_.ny; }
    double h() const { return h_; }

    int n_boundary() const { return 2 * cfg_.nx; }
    int n_interior() const { return (cfg_.ny - 2) * cfg_.nx; }

    // Boundary unknowns: bottom row first, then top row, each lexicographic in i.
    int bottom_boundary_index(int i) const { return i; }
    int top_boundary_index(int i) const { return cfg_.nx + i; }
    // Interior unknowns: lexicographic over rows j = 1 .. ny-2.
    int interior_index(int i, int j) const { return (j - 1) * cfg_.nx + i; }

    double x(int i) const { return cfg_.a1 + i * h_; }
    double y(int j) const { return cfg_.a3 + j * h_; }

    /// Coordinates of the interior unknowns, one row per node.
    Mat interior_nodes() const;

  private:
    GridConfig cfg_;
    double h_;
};

/// Finite-difference blocks of the boundary-first ordered system matrix.
/// Interior rows carry the h^2-scaled five-point stencil; boundary rows carry
/// the first-order Robin discretization with G kept diagonal.
struct BlockSystem {
    Vec g_diag;  // diagonal of G, size 2*nx
    SpMat D1;    // boundary -> interior coupling, 2*nx x ni
    SpMat D2;    // interior -> boundary coupling, ni x 2*nx
    SpMat L;     // SPD interior diffusion operator, ni x ni
};

BlockSystem assemble_blocks(const Grid& grid);

/// The SPD Schur-complement operator A~(p) = A~_* + diag(mu), where
/// A~_* = L - D2 G^-1 D1 and mu is the h^2-scaled absorption on interior nodes.
class SchurOperator {
  public:
    SchurOperator(const Grid& grid, const BlockSystem& blocks);

    int dim() const { return static_cast<int>(A_star_.rows()); }
    const SpMat& matrix() const { return A_star_; }

    Vec apply(const Vec& mu_scaled, const Vec& x) const;
    SpMat with_absorption(const Vec& mu_scaled) const;

  private:
    SpMat A_star_;
};

/// Effective sources and detectors after eliminating the boundary block.
/// Each column has exactly one nonzero, on the interior neighbor of the
/// corresponding boundary node.
struct SourceDetectorLayout {
    int n_src = 0;
    int n_det = 0;
    std::vector<int> src_nodes;  // boundary unknown indices (top row)
    std::vector<int> det_nodes;  // boundary unknown indices (bottom row)
    SpMat B1;                    // 2*nx x n_src, unit columns
    SpMat C1;                    // 2*nx x n_det, unit columns
    Mat B_tilde;                 // ni x n_src
    Mat C_tilde;                 // ni x n_det
    Mat B_concat;                // [B_tilde, C_tilde]
};

/// src_positions / det_positions are i-indices along the top / bottom rows.
SourceDetectorLayout effective_layout(const Grid& grid, const BlockSystem& blocks,
                                      const std::vector<int>& src_positions,
                                      const std::vector<int>& det_positions);

/// Evenly spaced i-positions excluding the corner nodes.
std::vector<int> evenly_spaced_positions(int nx, int count);

/// Dense [[G, D1],[D2, L + diag(mu)]] for small-grid oracles only.
Mat full_block_matrix(const Grid& grid, const BlockSystem& blocks, const Vec& mu_scaled);

}  // namespace romdot
