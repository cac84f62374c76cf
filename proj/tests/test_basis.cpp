#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cstring>
#include <random>

#include "romdot/basis.hpp"
#include "romdot/grid.hpp"
#include "romdot/pals.hpp"

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

    Desk(int n, int n_src, int n_det)
        : grid([n] {
              GridConfig c;
              c.nx = n;
              c.ny = n;
              return c;
          }()),
          blocks(assemble_blocks(grid)),
          op(grid, blocks),
          layout(effective_layout(grid, blocks, evenly_spaced_positions(n, n_src),
                                  evenly_spaced_positions(n, n_det))),
          nodes(grid.interior_nodes()),
          h2(grid.h() * grid.h()) {
        pals.m_bumps = 4;
    }

    Vec mu_of(const Vec& p) const { return h2 * eval_absorption(pals, p, nodes); }

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
};

Vec random_vec(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
}

}  // namespace

TEST_CASE("blockwise image QR agrees with a dense factorization") {
    Desk desk(15, 3, 3);
    const Vec mu = desk.mu_of(desk.params(0.0));
    auto init = init_basis(desk.op, mu, desk.layout.B_concat, 4, 1e-8);
    GlobalBasis& gb = init.basis;
    gb.refresh(mu);

    const int r = gb.cols();
    const Mat K_full = Mat(desk.op.with_absorption(mu)) * gb.V();
    CHECK((gb.K_img() * gb.R() - K_full).norm() <= 1e-12 * K_full.norm());
    CHECK((gb.K_img().transpose() * gb.K_img() - Mat::Identity(r, r)).norm() <= 1e-12);
    // Upper triangular R, and sign-insensitive match with Householder QR.
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < i; ++j) CHECK(gb.R()(i, j) == 0.0);
    Eigen::HouseholderQR<Mat> qr(K_full);
    const Mat Q = qr.householderQ() * Mat::Identity(K_full.rows(), r);
    const Mat M = Q.transpose() * gb.K_img();
    for (int i = 0; i < r; ++i) CHECK(std::abs(std::abs(M(i, i)) - 1.0) <= 1e-10);
}

TEST_CASE("append extends the factorization consistently") {
    Desk desk(15, 3, 3);
    const Vec mu = desk.mu_of(desk.params(0.0));
    auto init = init_basis(desk.op, mu, desk.layout.B_concat, 4, 1e-8);
    GlobalBasis& gb = init.basis;
    gb.refresh(mu);

    for (int t = 0; t < 5; ++t) {
        const Vec y = random_vec(desk.op.dim(), 40 + t);
        const Vec Astar_y = desk.op.matrix() * y;
        REQUIRE(gb.append(y, Astar_y, mu, kColCorrection));
    }
    const int r = gb.cols();
    const Mat K_full = Mat(desk.op.with_absorption(mu)) * gb.V();
    CHECK((gb.K_img() * gb.R() - K_full).norm() <= 1e-10 * K_full.norm());
    CHECK((gb.K_img().transpose() * gb.K_img() - Mat::Identity(r, r)).norm() <= 1e-10);

    // A refresh from scratch must give the same projected solves.
    const Vec b = random_vec(desk.op.dim(), 99);
    const Vec x_incremental = gb.solve_projected(b);
    gb.refresh(mu);
    const Vec x_refreshed = gb.solve_projected(b);
    CHECK((x_incremental - x_refreshed).norm() <= 1e-9 * x_refreshed.norm());
}

TEST_CASE("appending a direction already in the image span is dropped") {
    Desk desk(15, 3, 3);
    const Vec mu = desk.mu_of(desk.params(0.0));
    auto init = init_basis(desk.op, mu, desk.layout.B_concat, 4, 1e-8);
    GlobalBasis& gb = init.basis;
    gb.refresh(mu);
    const int before = gb.cols();
    const Vec y = gb.V() * Vec::Constant(before, 0.3);
    const Vec Astar_y = desk.op.matrix() * y;
    CHECK_FALSE(gb.append(y, Astar_y, mu, kColCorrection));
    CHECK(gb.cols() == before);
}

TEST_CASE("projected solve is the least-squares solution over the basis") {
    Desk desk(15, 3, 3);
    const Vec mu = desk.mu_of(desk.params(0.0));
    auto init = init_basis(desk.op, mu, desk.layout.B_concat, 4, 1e-8);
    GlobalBasis& gb = init.basis;
    gb.refresh(mu);

    const Vec b = random_vec(desk.op.dim(), 7);
    const Vec x = gb.solve_projected(b);
    const Mat A = Mat(desk.op.with_absorption(mu));
    const Mat AV = A * gb.V();
    const Vec c_ref = AV.colPivHouseholderQr().solve(b);
    CHECK((x - gb.V() * c_ref).norm() <= 1e-8 * x.norm());
}

TEST_CASE("reprocessing an already-covered system takes zero iterations") {
    Desk desk(21, 4, 4);
    const Vec mu = desk.mu_of(desk.params(0.0));
    auto init = init_basis(desk.op, mu, desk.layout.B_concat, 6, 1e-7);
    auto pr = process_system(init.basis, init.spaces, desk.op, mu, desk.layout.B_concat, 1e-7, 1);
    for (const auto& row : pr.log) {
        CHECK(row.iterations == 0);
        CHECK_FALSE(row.appended);
    }
    CHECK(pr.appends == 0);
}

TEST_CASE("basis growth accounting matches the build log") {
    Desk desk(21, 4, 4);
    const int k_eig = 6;
    const int n_rhs = 8;
    auto init = init_basis(desk.op, desk.mu_of(desk.params(0.0)), desk.layout.B_concat, k_eig, 1e-7);
    CHECK(init.basis.cols() == k_eig + n_rhs);
    CHECK(init.basis.eig_block() == k_eig);

    long appends = 0;
    std::vector<BuildLogRow> log;
    for (int sys = 1; sys <= 2; ++sys) {
        auto pr = process_system(init.basis, init.spaces, desk.op,
                                 desk.mu_of(desk.params(0.02 * sys)), desk.layout.B_concat, 1e-7,
                                 sys);
        appends += pr.appends;
        log.insert(log.end(), pr.log.begin(), pr.log.end());
    }
    CHECK(init.basis.cols() == k_eig + n_rhs + appends);

    long appended_rows = 0;
    for (const auto& row : log)
        if (row.appended) ++appended_rows;
    CHECK(appended_rows == appends);

    long corr = 0;
    for (auto mk : init.basis.markers())
        if (mk == kColCorrection) ++corr;
    CHECK(corr == appends);
}

TEST_CASE("every reported solution passes an explicit residual check") {
    Desk desk(21, 4, 4);
    auto init = init_basis(desk.op, desk.mu_of(desk.params(0.0)), desk.layout.B_concat, 6, 1e-7);
    for (int sys = 1; sys <= 2; ++sys) {
        const Vec mu = desk.mu_of(desk.params(0.015 * sys));
        auto pr = process_system(init.basis, init.spaces, desk.op, mu, desk.layout.B_concat, 1e-7,
                                 sys);
        const SpMat A = desk.op.with_absorption(mu);
        for (Eigen::Index j = 0; j < pr.X.cols(); ++j) {
            const Vec b = desk.layout.B_concat.col(j);
            CHECK((b - A * pr.X.col(j)).norm() <= 1e-7 * b.norm());
        }
    }
}

TEST_CASE("per-rhs spaces reference valid basis columns") {
    Desk desk(21, 4, 4);
    auto init = init_basis(desk.op, desk.mu_of(desk.params(0.0)), desk.layout.B_concat, 6, 1e-7);
    process_system(init.basis, init.spaces, desk.op, desk.mu_of(desk.params(0.02)),
                   desk.layout.B_concat, 1e-7, 1);
    const int r = init.basis.cols();
    REQUIRE(init.spaces.cols.size() == 8);
    for (std::size_t j = 0; j < init.spaces.cols.size(); ++j) {
        const auto& cols = init.spaces.cols[j];
        for (int i = 0; i < 6; ++i) CHECK(cols[static_cast<std::size_t>(i)] == i);
        CHECK(cols[6] == 6 + static_cast<int>(j));
        for (int c : cols) CHECK(c < r);
    }
}

TEST_CASE("basis build is deterministic") {
    auto build = [] {
        Desk desk(21, 4, 4);
        auto init = init_basis(desk.op, desk.mu_of(desk.params(0.0)), desk.layout.B_concat, 6,
                               1e-7);
        process_system(init.basis, init.spaces, desk.op, desk.mu_of(desk.params(0.02)),
                       desk.layout.B_concat, 1e-7, 1);
        return init.basis.V();
    };
    const Mat V1 = build();
    const Mat V2 = build();
    REQUIRE(V1.size() == V2.size());
    CHECK(std::memcmp(V1.data(), V2.data(), sizeof(double) * V1.size()) == 0);
}

TEST_CASE("baseline recycler solves to tolerance with per-rhs growth only") {
    Desk desk(21, 4, 4);
    auto init = init_basis(desk.op, desk.mu_of(desk.params(0.0)), desk.layout.B_concat, 6, 1e-7);
    const Mat U0 = init.basis.V().leftCols(6);
    const Mat X0 = init.basis.V().middleCols(6, 8);
    BaselinePerRhsRecycler baseline(desk.op, U0, X0);
    for (int sys = 1; sys <= 2; ++sys) {
        const Vec mu = desk.mu_of(desk.params(0.02 * sys));
        auto pr = baseline.solve_system(mu, desk.layout.B_concat, 1e-7, sys);
        const SpMat A = desk.op.with_absorption(mu);
        for (Eigen::Index j = 0; j < pr.X.cols(); ++j) {
            const Vec b = desk.layout.B_concat.col(j);
            CHECK((b - A * pr.X.col(j)).norm() <= 1e-7 * b.norm());
        }
    }
}

TEST_CASE("coefficients of basis columns are unit vectors") {
    Desk desk(15, 3, 3);
    auto init = init_basis(desk.op, desk.mu_of(desk.params(0.0)), desk.layout.B_concat, 4, 1e-8);
    const Mat& V = init.basis.V();
    const Mat C = basis_coefficients(V, V.leftCols(3));
    for (int j = 0; j < 3; ++j) {
        Vec e = Vec::Zero(V.cols());
        e[j] = 1.0;
        CHECK((C.col(j) - e).norm() <= 1e-10);
    }
    CHECK(basis_coefficients(V, Mat::Zero(V.rows(), 1)).norm() <= 1e-14);
    CHECK_THROWS_AS(basis_coefficients(V, Mat::Zero(3, 1)), ConfigError);
}
