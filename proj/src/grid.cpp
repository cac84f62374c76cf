#include "romdot/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace romdot {

void GridConfig::validate() const {
    if (nx < 5 || ny < 5)
        throw ConfigError("grid: nx and ny must both be at least 5");
    if (b1 <= a1 || b3 <= a3)
        throw ConfigError("grid: empty domain");
    const double hx = (b1 - a1) / (nx - 1);
    const double hy = (b3 - a3) / (ny - 1);
    if (std::abs(hx - hy) > 1e-12 * std::max(hx, hy))
        throw ConfigError("grid: cells must be square");
    if (diffusion <= 0.0 || boundary_constant < 0.0 || speed <= 0.0)
        throw ConfigError("grid: physical constants must be positive");
}

Grid::Grid(GridConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    h_ = cfg_.spacing();
}

Mat Grid::interior_nodes() const {
    Mat nodes(n_interior(), 2);
    for (int j = 1; j <= cfg_.ny - 2; ++j)
        for (int i = 0; i < cfg_.nx; ++i) {
            const int p = interior_index(i, j);
            nodes(p, 0) = x(i);
            nodes(p, 1) = y(j);
        }
    return nodes;
}

BlockSystem assemble_blocks(const Grid& grid) {
    const int nx = grid.nx();
    const int ny = grid.ny();
    const int nb = grid.n_boundary();
    const int ni = grid.n_interior();
    const double d0 = grid.config().diffusion;
    const double robin = 2.0 * grid.config().boundary_constant * d0 / grid.h();

    BlockSystem blocks;
    blocks.g_diag = Vec::Constant(nb, 1.0 + robin);

    std::vector<Triplet> t1, t2, tl;
    t1.reserve(nb);
    t2.reserve(nb);
    for (int i = 0; i < nx; ++i) {
        // Robin row: (1 + robin) eta_b - robin eta_i = src.
        const int bb = grid.bottom_boundary_index(i);
        const int tb = grid.top_boundary_index(i);
        const int pb = grid.interior_index(i, 1);
        const int pt = grid.interior_index(i, ny - 2);
        t1.emplace_back(bb, pb, -robin);
        t1.emplace_back(tb, pt, -robin);
        // Interior stencil coupling to the boundary neighbor.
        t2.emplace_back(pb, bb, -d0);
        t2.emplace_back(pt, tb, -d0);
    }

    tl.reserve(static_cast<std::size_t>(5) * ni);
    for (int j = 1; j <= ny - 2; ++j)
        for (int i = 0; i < nx; ++i) {
            const int p = grid.interior_index(i, j);
            tl.emplace_back(p, p, 4.0 * d0);
            if (i > 0) tl.emplace_back(p, grid.interior_index(i - 1, j), -d0);
            if (i < nx - 1) tl.emplace_back(p, grid.interior_index(i + 1, j), -d0);
            if (j > 1) tl.emplace_back(p, grid.interior_index(i, j - 1), -d0);
            if (j < ny - 2) tl.emplace_back(p, grid.interior_index(i, j + 1), -d0);
            // Neighbors outside the left/right sides are Dirichlet ghosts (value 0).
        }

    blocks.D1.resize(nb, ni);
    blocks.D1.setFromTriplets(t1.begin(), t1.end());
    blocks.D2.resize(ni, nb);
    blocks.D2.setFromTriplets(t2.begin(), t2.end());
    blocks.L.resize(ni, ni);
    blocks.L.setFromTriplets(tl.begin(), tl.end());
    return blocks;
}

SchurOperator::SchurOperator(const Grid& grid, const BlockSystem& blocks) {
    (void)grid;
    if ((blocks.g_diag.array().abs() < 1e-300).any())
        throw SolverError("schur: singular boundary block G");
    const SpMat ginv_d1 = blocks.g_diag.cwiseInverse().asDiagonal() * blocks.D1;
    A_star_ = blocks.L - SpMat(blocks.D2 * ginv_d1);
    A_star_.makeCompressed();
}

Vec SchurOperator::apply(const Vec& mu_scaled, const Vec& x) const {
    return A_star_ * x + mu_scaled.cwiseProduct(x);
}

SpMat SchurOperator::with_absorption(const Vec& mu_scaled) const {
    SpMat A = A_star_;
    for (int i = 0; i < A.rows(); ++i)
        A.coeffRef(i, i) += mu_scaled[i];
    A.makeCompressed();
    return A;
}

std::vector<int> evenly_spaced_positions(int nx, int count) {
    if (count < 1 || count > nx - 2)
        throw ConfigError("layout: source/detector count must be in [1, nx-2]");
    std::vector<int> pos(count);
    if (count == 1) {
        pos[0] = nx / 2;
    } else {
        for (int k = 0; k < count; ++k)
            pos[k] = 1 + static_cast<int>(std::lround(static_cast<double>(k) * (nx - 3) / (count - 1)));
    }
    std::set<int> unique(pos.begin(), pos.end());
    if (static_cast<int>(unique.size()) != count)
        throw ConfigError("layout: positions collide; too many sources/detectors for this grid");
    return pos;
}

SourceDetectorLayout effective_layout(const Grid& grid, const BlockSystem& blocks,
                                      const std::vector<int>& src_positions,
                                      const std::vector<int>& det_positions) {
    SourceDetectorLayout layout;
    layout.n_src = static_cast<int>(src_positions.size());
    layout.n_det = static_cast<int>(det_positions.size());

    std::set<int> seen;
    for (int i : src_positions) {
        if (i < 0 || i >= grid.nx()) throw ConfigError("layout: source position out of range");
        layout.src_nodes.push_back(grid.top_boundary_index(i));
    }
    for (int i : det_positions) {
        if (i < 0 || i >= grid.nx()) throw ConfigError("layout: detector position out of range");
        layout.det_nodes.push_back(grid.bottom_boundary_index(i));
    }
    for (int b : layout.src_nodes)
        if (!seen.insert(b).second) throw ConfigError("layout: duplicate source node");
    for (int b : layout.det_nodes)
        if (!seen.insert(b).second) throw ConfigError("layout: source/detector nodes must be disjoint");

    const int nb = grid.n_boundary();
    std::vector<Triplet> tb, tc;
    for (int s = 0; s < layout.n_src; ++s) tb.emplace_back(layout.src_nodes[s], s, 1.0);
    for (int d = 0; d < layout.n_det; ++d) tc.emplace_back(layout.det_nodes[d], d, 1.0);
    layout.B1.resize(nb, layout.n_src);
    layout.B1.setFromTriplets(tb.begin(), tb.end());
    layout.C1.resize(nb, layout.n_det);
    layout.C1.setFromTriplets(tc.begin(), tc.end());

    const auto ginv = blocks.g_diag.cwiseInverse().asDiagonal();
    layout.B_tilde = Mat(blocks.D2 * (ginv * layout.B1));
    layout.C_tilde = Mat(blocks.D1.transpose() * (ginv * layout.C1));

    layout.B_concat.resize(layout.B_tilde.rows(), layout.n_src + layout.n_det);
    layout.B_concat << layout.B_tilde, layout.C_tilde;
    return layout;
}

Mat full_block_matrix(const Grid& grid, const BlockSystem& blocks, const Vec& mu_scaled) {
    const int nb = grid.n_boundary();
    const int ni = grid.n_interior();
    if (nb + ni > 2500)
        throw SolverError("full_block_matrix: oracle limited to 2500 unknowns");
    Mat A = Mat::Zero(nb + ni, nb + ni);
    A.topLeftCorner(nb, nb) = blocks.g_diag.asDiagonal();
    A.topRightCorner(nb, ni) = Mat(blocks.D1);
    A.bottomLeftCorner(ni, nb) = Mat(blocks.D2);
    A.bottomRightCorner(ni, ni) = Mat(blocks.L) + Mat(mu_scaled.asDiagonal());
    return A;
}

}  // namespace romdot
