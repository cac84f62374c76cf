#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "romdot/grid.hpp"

using namespace romdot;

namespace {

GridConfig small_config(int n) {
    GridConfig cfg;
    cfg.nx = n;
    cfg.ny = n;
    cfg.b1 = 1.0;
    cfg.b3 = 1.0;
    return cfg;
}

// Transfer function of the full block system, boundary sources and detectors.
Mat dense_transfer(const Grid& grid, const BlockSystem& blocks, const SourceDetectorLayout& layout,
                   const Vec& mu_scaled) {
    const Mat A = full_block_matrix(grid, blocks, mu_scaled);
    const int nb = grid.n_boundary();
    Mat rhs = Mat::Zero(A.rows(), layout.n_src);
    rhs.topRows(nb) = Mat(layout.B1);
    const Mat sol = A.lu().solve(rhs);
    return Mat(layout.C1).transpose() * sol.topRows(nb);
}

}  // namespace

TEST_CASE("config validation rejects malformed grids") {
    CHECK_THROWS_AS(Grid{small_config(4)}, ConfigError);
    GridConfig bad = small_config(9);
    bad.b3 = 2.0;  // non-square cells
    CHECK_THROWS_AS(Grid{bad}, ConfigError);
    bad = small_config(9);
    bad.diffusion = 0.0;
    CHECK_THROWS_AS(Grid{bad}, ConfigError);
    CHECK_NOTHROW(Grid{small_config(9)});
}

TEST_CASE("interior stencil and Robin rows have the expected coefficients") {
    GridConfig cfg = small_config(7);
    cfg.diffusion = 0.3;
    cfg.boundary_constant = 2.0;
    Grid grid(cfg);
    const auto blocks = assemble_blocks(grid);
    const double h = grid.h();

    for (int i = 0; i < grid.n_boundary(); ++i)
        CHECK(blocks.g_diag[i] == doctest::Approx(1.0 + 2.0 * 2.0 * 0.3 / h));

    const Mat L(blocks.L);
    for (int j = 1; j < cfg.ny - 1; ++j)
        for (int i = 0; i < cfg.nx; ++i)
            CHECK(L(grid.interior_index(i, j), grid.interior_index(i, j)) ==
                  doctest::Approx(4.0 * 0.3));
    // Horizontal neighbor inside the slab.
    CHECK(L(grid.interior_index(2, 2), grid.interior_index(3, 2)) == doctest::Approx(-0.3));
}

TEST_CASE("D2 has the sparsity pattern of D1 transposed") {
    Grid grid(small_config(8));
    const auto blocks = assemble_blocks(grid);
    const Mat D1(blocks.D1);
    const Mat D2(blocks.D2);
    REQUIRE(D1.rows() == D2.cols());
    REQUIRE(D1.cols() == D2.rows());
    for (Eigen::Index r = 0; r < D1.rows(); ++r)
        for (Eigen::Index c = 0; c < D1.cols(); ++c)
            CHECK((D1(r, c) != 0.0) == (D2(c, r) != 0.0));
}

TEST_CASE("Schur transfer equals the dense block-system transfer") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int n : {5, 7, 9, 12}) {
        Grid grid(small_config(n));
        const auto blocks = assemble_blocks(grid);
        const SchurOperator op(grid, blocks);
        const auto layout = effective_layout(grid, blocks, evenly_spaced_positions(n, 2),
                                             evenly_spaced_positions(n, 3));
        for (int trial = 0; trial < 5; ++trial) {
            Vec mu(op.dim());
            for (int i = 0; i < op.dim(); ++i) mu[i] = unif(rng);
            mu *= grid.h() * grid.h();

            const Mat full = dense_transfer(grid, blocks, layout, mu);
            const Mat schur =
                layout.C_tilde.transpose() *
                Mat(op.with_absorption(mu)).ldlt().solve(layout.B_tilde);
            CHECK((full - schur).norm() <= 1e-10 * full.norm());
        }
    }
}

TEST_CASE("Schur complement is symmetric positive definite") {
    Grid grid(small_config(9));
    const auto blocks = assemble_blocks(grid);
    const SchurOperator op(grid, blocks);
    Vec mu = Vec::Constant(op.dim(), 0.05 * grid.h() * grid.h());
    const Mat A(op.with_absorption(mu));
    CHECK((A - A.transpose()).norm() <= 1e-12 * A.norm());
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("vanishing boundary constant decouples the Robin rows") {
    GridConfig cfg = small_config(8);
    cfg.boundary_constant = 0.0;
    Grid grid(cfg);
    const auto blocks = assemble_blocks(grid);
    const SchurOperator op(grid, blocks);
    CHECK((Mat(op.matrix()) - Mat(blocks.L)).norm() <= 1e-14);
    CHECK(Mat(blocks.D1).norm() == 0.0);
}

TEST_CASE("operator apply matches explicit matrix") {
    Grid grid(small_config(9));
    const auto blocks = assemble_blocks(grid);
    const SchurOperator op(grid, blocks);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    Vec mu(op.dim()), x(op.dim());
    for (int i = 0; i < op.dim(); ++i) {
        mu[i] = std::abs(normal(rng));
        x[i] = normal(rng);
    }
    const Vec via_apply = op.apply(mu, x);
    const Vec via_matrix = op.with_absorption(mu) * x;
    CHECK((via_apply - via_matrix).norm() <= 1e-12 * via_matrix.norm());
}

TEST_CASE("effective sources and detectors have one nonzero per column") {
    Grid grid(small_config(12));
    const auto blocks = assemble_blocks(grid);
    const auto layout = effective_layout(grid, blocks, evenly_spaced_positions(12, 4),
                                         evenly_spaced_positions(12, 4));
    CHECK(layout.B_concat.cols() == 8);
    for (int j = 0; j < layout.n_src; ++j) {
        int nonzeros = 0;
        for (Eigen::Index i = 0; i < layout.B_tilde.rows(); ++i)
            if (layout.B_tilde(i, j) != 0.0) ++nonzeros;
        CHECK(nonzeros == 1);
    }
    for (int j = 0; j < layout.n_det; ++j) {
        int nonzeros = 0;
        for (Eigen::Index i = 0; i < layout.C_tilde.rows(); ++i)
            if (layout.C_tilde(i, j) != 0.0) ++nonzeros;
        CHECK(nonzeros == 1);
    }
}

TEST_CASE("evenly spaced positions avoid corners and stay sorted") {
    const auto pos = evenly_spaced_positions(41, 8);
    REQUIRE(pos.size() == 8);
    CHECK(pos.front() >= 1);
    CHECK(pos.back() <= 39);
    for (std::size_t i = 1; i < pos.size(); ++i) CHECK(pos[i] > pos[i - 1]);
}

TEST_CASE("interior node coordinates") {
    Grid grid(small_config(6));
    const Mat nodes = grid.interior_nodes();
    REQUIRE(nodes.rows() == grid.n_interior());
    CHECK(nodes(grid.interior_index(0, 1), 0) == doctest::Approx(0.0));
    CHECK(nodes(grid.interior_index(0, 1), 1) == doctest::Approx(grid.h()));
    CHECK(nodes(grid.interior_index(5, 4), 0) == doctest::Approx(1.0));
    CHECK(nodes(grid.interior_index(5, 4), 1) == doctest::Approx(4 * grid.h()));
}
