#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "romdot/basis.hpp"
#include "romdot/grid.hpp"
#include "romdot/rom.hpp"

using namespace romdot;

namespace {

struct Desk {
    Grid grid;
    BlockSystem blocks;
    SchurOperator op;
    SourceDetectorLayout layout;
    Mat nodes;
    double h2;
    PalsModel pals;

    explicit Desk(int n)
        : grid([n] {
              GridConfig c;
              c.nx = n;
              c.ny = n;
              return c;
          }()),
          blocks(assemble_blocks(grid)),
          op(grid, blocks),
          layout(effective_layout(grid, blocks, evenly_spaced_positions(n, 3),
                                  evenly_spaced_positions(n, 3))),
          nodes(grid.interior_nodes()),
          h2(grid.h() * grid.h()) {
        pals.m_bumps = 4;
    }

    Vec params(double offset) const {
        Vec p(pals.n_params());
        for (int j = 0; j < 4; ++j) {
            p[j] = 0.6 + offset;
            p[4 + j] = 0.9;
            p[8 + 2 * j] = 1.0 + 2.0 * (j % 2);
            p[8 + 2 * j + 1] = 1.0 + 2.0 * (j / 2);
        }
        return p;
    }

    Vec mu_of(const Vec& p) const { return h2 * eval_absorption(pals, p, nodes); }
};

Mat random_orthonormal(int n, int r, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Mat M(n, r);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < r; ++j) M(i, j) = normal(rng);
    Eigen::HouseholderQR<Mat> qr(M);
    return qr.householderQ() * Mat::Identity(n, r);
}

}  // namespace

TEST_CASE("reduced operators are dense triple products") {
    Desk desk(15);
    const Mat V = random_orthonormal(desk.op.dim(), 12, 5);
    ReducedModel rom(V, desk.op.matrix(), desk.layout.B_tilde, desk.layout.C_tilde);
    const Vec mu = desk.mu_of(desk.params(0.0));

    const Mat A = Mat(desk.op.with_absorption(mu));
    const Mat Ar_ref = V.transpose() * A * V;
    CHECK((rom.reduced_system(mu) - Ar_ref).norm() <= 1e-12 * Ar_ref.norm());
    CHECK((rom.E_r() - V.transpose() * V).norm() <= 1e-12);
}

TEST_CASE("identity basis reproduces the full-order transfer function") {
    Desk desk(11);
    const Mat V = Mat::Identity(desk.op.dim(), desk.op.dim());
    ReducedModel rom(V, desk.op.matrix(), desk.layout.B_tilde, desk.layout.C_tilde);
    const Vec mu = desk.mu_of(desk.params(0.0));

    const Mat psi_rom = rom.transfer(mu);
    const Mat psi_fom = fom_transfer(desk.op, desk.layout, mu);
    CHECK((psi_rom - psi_fom).norm() <= 1e-10 * psi_fom.norm());

    const Vec p = desk.params(0.0);
    const Mat J_rom = rom.jacobian(desk.pals, p, desk.nodes, desk.h2);
    const Mat J_fom = fom_jacobian(desk.op, desk.layout, desk.pals, p, desk.nodes, desk.h2);
    CHECK((J_rom - J_fom).norm() <= 1e-9 * J_fom.norm());
}

TEST_CASE("full-order Jacobian matches central finite differences") {
    Desk desk(9);
    const Vec p = desk.params(0.0);
    const Mat J = fom_jacobian(desk.op, desk.layout, desk.pals, p, desk.nodes, desk.h2);
    const double h = 1e-6;
    for (int k = 0; k < desk.pals.n_params(); k += 3) {
        Vec pp = p, pm = p;
        pp[k] += h;
        pm[k] -= h;
        const Mat up = fom_transfer(desk.op, desk.layout, desk.mu_of(pp));
        const Mat um = fom_transfer(desk.op, desk.layout, desk.mu_of(pm));
        const Mat fd = (up - um) / (2 * h);
        const Vec fd_vec = Eigen::Map<const Vec>(fd.data(), fd.size());
        const double scale = std::max(fd_vec.norm(), 1e-12);
        CHECK((J.col(k) - fd_vec).norm() / scale <= 1e-5);
    }
}

TEST_CASE("reduced Jacobian matches finite differences of the reduced transfer") {
    Desk desk(11);
    auto init = init_basis(desk.op, desk.mu_of(desk.params(0.0)), desk.layout.B_concat, 4, 1e-9);
    ReducedModel rom(init.basis.V(), desk.op.matrix(), desk.layout.B_tilde, desk.layout.C_tilde);
    const Vec p = desk.params(0.0);
    const Mat J = rom.jacobian(desk.pals, p, desk.nodes, desk.h2);
    const double h = 1e-6;
    for (int k = 0; k < desk.pals.n_params(); k += 5) {
        Vec pp = p, pm = p;
        pp[k] += h;
        pm[k] -= h;
        const Mat fd = (rom.transfer(desk.mu_of(pp)) - rom.transfer(desk.mu_of(pm))) / (2 * h);
        const Vec fd_vec = Eigen::Map<const Vec>(fd.data(), fd.size());
        const double scale = std::max(fd_vec.norm(), 1e-12);
        CHECK((J.col(k) - fd_vec).norm() / scale <= 1e-5);
    }
}

TEST_CASE("direct and MINRES full-order paths agree") {
    Desk desk(13);
    const Vec mu = desk.mu_of(desk.params(0.0));
    const Mat direct = fom_transfer(desk.op, desk.layout, mu, FomSolve::Direct);
    const Mat iterative = fom_transfer(desk.op, desk.layout, mu, FomSolve::Minres, 1e-12);
    CHECK((direct - iterative).norm() <= 1e-8 * direct.norm());
}

TEST_CASE("recycling basis interpolates the transfer function at its parameters") {
    Desk desk(21);
    const Vec p0 = desk.params(0.0);
    auto init = init_basis(desk.op, desk.mu_of(p0), desk.layout.B_concat, 6, 1e-8);
    std::vector<Vec> params = {p0};
    for (int sys = 1; sys <= 2; ++sys) {
        params.push_back(desk.params(0.03 * sys));
        process_system(init.basis, init.spaces, desk.op, desk.mu_of(params.back()),
                       desk.layout.B_concat, 1e-8, sys);
    }
    ReducedModel rom(init.basis.V(), desk.op.matrix(), desk.layout.B_tilde, desk.layout.C_tilde);
    for (const Vec& p : params) {
        const Vec mu = desk.mu_of(p);
        const Mat psi = fom_transfer(desk.op, desk.layout, mu);
        CHECK((rom.transfer(mu) - psi).norm() <= 1e-6 * psi.norm());
    }
}

TEST_CASE("truncated-SVD basis from the same solves gives an equivalent ROM") {
    Desk desk(21);
    const Vec p0 = desk.params(0.0);
    auto init = init_basis(desk.op, desk.mu_of(p0), desk.layout.B_concat, 6, 1e-9);
    std::vector<Vec> params = {p0};
    std::vector<Mat> solutions = {init.X0};
    for (int sys = 1; sys <= 2; ++sys) {
        params.push_back(desk.params(0.03 * sys));
        auto pr = process_system(init.basis, init.spaces, desk.op, desk.mu_of(params.back()),
                                 desk.layout.B_concat, 1e-9, sys);
        solutions.push_back(pr.X);
    }

    // Collect every solution (plus the invariant-subspace block) and compress
    // with a truncated SVD instead of the incremental QR.
    const int n_rhs = static_cast<int>(desk.layout.B_concat.cols());
    Mat S(desk.op.dim(), 6 + n_rhs * static_cast<int>(solutions.size()));
    S.leftCols(6) = init.basis.V().leftCols(6);
    for (std::size_t t = 0; t < solutions.size(); ++t)
        S.middleCols(6 + static_cast<int>(t) * n_rhs, n_rhs) = solutions[t];
    Eigen::BDCSVD<Mat> svd(S, Eigen::ComputeThinU);
    int rank = 0;
    while (rank < svd.singularValues().size() &&
           svd.singularValues()[rank] > 1e-10 * svd.singularValues()[0])
        ++rank;
    const Mat V_svd = svd.matrixU().leftCols(rank);

    ReducedModel rom_qr(init.basis.V(), desk.op.matrix(), desk.layout.B_tilde, desk.layout.C_tilde);
    ReducedModel rom_svd(V_svd, desk.op.matrix(), desk.layout.B_tilde, desk.layout.C_tilde);
    for (const Vec& p : params) {
        const Vec mu = desk.mu_of(p);
        const Mat a = rom_qr.transfer(mu);
        const Mat b = rom_svd.transfer(mu);
        CHECK((a - b).norm() <= 1e-4 * a.norm());
    }
}
