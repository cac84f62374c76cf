#include "romdot/harness.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "romdot/io.hpp"
#include "romdot/rom.hpp"

namespace romdot {

namespace {

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

std::string int_cell(long v) { return std::to_string(v); }

}  // namespace

Problem::Problem(const ExperimentConfig& cfg)
    : grid(cfg.grid),
      blocks(assemble_blocks(grid)),
      op(grid, blocks),
      layout(effective_layout(grid, blocks, evenly_spaced_positions(cfg.grid.nx, cfg.n_src),
                              evenly_spaced_positions(cfg.grid.nx, cfg.n_det))),
      nodes(grid.interior_nodes()),
      h2(grid.h() * grid.h()) {}

SimulatedData simulate_data(const ExperimentConfig& cfg, const Problem& prob) {
    SimulatedData data;
    data.mu_truth = rasterize_phantom(cfg.phantom, cfg.pals, prob.nodes);
    const Mat psi = fom_transfer(prob.op, prob.layout, prob.h2 * data.mu_truth);
    data.clean = Eigen::Map<const Vec>(psi.data(), psi.size());
    data.noisy = data.clean;
    NormalStream stream(cfg.run.seed);
    for (Eigen::Index i = 0; i < data.clean.size(); ++i)
        data.noisy[i] += cfg.run.noise_fraction * std::abs(data.clean[i]) * stream.next();
    data.noise_norm = (data.noisy - data.clean).norm();
    return data;
}

Mat interior_image(const Grid& grid, const Vec& mu) {
    const int nx = grid.nx();
    const int rows = grid.ny() - 2;
    Mat image(rows, nx);
    for (int j = 1; j <= rows; ++j)
        for (int i = 0; i < nx; ++i)
            image(rows - j, i) = mu[grid.interior_index(i, j)];  // top of the slab first
    return image;
}

Vec parameter_in_sequence(const ExperimentConfig& cfg, int index) {
    Vec p = cfg.initial_parameters();
    if (index == 0) return p;
    NormalStream stream(cfg.run.seed + 1000003ull * static_cast<std::uint64_t>(index));
    const int m = cfg.pals.m_bumps;
    const double jitter = 0.02 * cfg.grid.spacing() * (cfg.grid.nx / 8.0);
    for (int j = 0; j < m; ++j) {
        p[j] *= 1.0 + 0.03 * stream.next();
        p[m + j] *= 1.0 + 0.01 * stream.next();
        p[2 * m + 2 * j] += jitter * stream.next();
        p[2 * m + 2 * j + 1] += jitter * stream.next();
    }
    return p;
}

namespace {

void write_measurements(const std::string& path, const Problem& prob, const Vec& values) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(static_cast<std::size_t>(values.size()));
    for (int s = 0; s < prob.layout.n_src; ++s)
        for (int d = 0; d < prob.layout.n_det; ++d)
            rows.push_back({int_cell(s), int_cell(d),
                            format_sci(values[s * prob.layout.n_det + d])});
    write_csv_rows(path, {"src", "det", "value"}, rows);
}

}  // namespace

int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir) {
    ensure_dir(out_dir);
    Problem prob(cfg);
    const SimulatedData data = simulate_data(cfg, prob);

    write_pgm(join(out_dir, "truth.pgm"), interior_image(prob.grid, data.mu_truth),
              cfg.pals.mu_out, cfg.pals.mu_in);
    write_measurements(join(out_dir, "data_clean.csv"), prob, data.clean);
    write_measurements(join(out_dir, "data_noisy.csv"), prob, data.noisy);
    write_manifest(join(out_dir, "noise.txt"),
                   {{"noise_norm", format_sci(data.noise_norm)},
                    {"noise_fraction", format_sci(cfg.run.noise_fraction)},
                    {"seed", std::to_string(cfg.run.seed)},
                    {"n_src", std::to_string(prob.layout.n_src)},
                    {"n_det", std::to_string(prob.layout.n_det)}});
    std::cout << "simulate: wrote " << data.clean.size() << " measurements, noise_norm="
              << format_sci(data.noise_norm) << "\n";
    return 0;
}

namespace {

void write_trace(const std::string& path, const std::vector<TraceRow>& trace) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& t : trace)
        rows.push_back({int_cell(t.iteration), format_sci(t.residual_norm),
                        format_sci(t.trust_radius), format_sci(t.step_norm),
                        int_cell(t.accepted ? 1 : 0), int_cell(t.function_evals),
                        int_cell(t.jacobian_evals)});
    write_csv_rows(path,
                   {"iteration", "residual_norm", "trust_radius", "step_norm", "accepted",
                    "function_evals", "jacobian_evals"},
                   rows);
}

void write_buildlog(const std::string& path, const std::vector<BuildLogRow>& log) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : log)
        rows.push_back({int_cell(row.system), int_cell(row.rhs), format_sci(row.init_relres),
                        int_cell(row.iterations), int_cell(row.appended ? 1 : 0)});
    write_csv_rows(path, {"system", "rhs", "init_relres", "iterations", "appended"}, rows);
}

}  // namespace

InvertOutcome cmd_invert(const ExperimentConfig& cfg, const std::string& mode,
                         const std::string& out_dir) {
    if (mode != "fom" && mode != "rom-hybrid")
        throw ConfigError("invert: mode must be fom or rom-hybrid");
    ensure_dir(out_dir);
    Problem prob(cfg);
    const SimulatedData data = simulate_data(cfg, prob);
    const Vec p0 = parameter_in_sequence(cfg, 0);

    ForwardSetup setup;
    setup.op = &prob.op;
    setup.layout = &prob.layout;
    setup.pals = &cfg.pals;
    setup.nodes = prob.nodes;
    setup.h2 = prob.h2;
    setup.solver_tol = cfg.run.solver_tol;

    std::unique_ptr<ForwardEvaluator> eval;
    HybridEvaluator* hybrid = nullptr;
    if (mode == "fom") {
        eval = std::make_unique<FomEvaluator>(setup);
    } else {
        const Vec mu0 = prob.h2 * eval_absorption(cfg.pals, p0, prob.nodes);
        auto init = init_basis(prob.op, mu0, prob.layout.B_concat, cfg.run.k_eig,
                               cfg.run.tol_basis);
        auto h = std::make_unique<HybridEvaluator>(setup, std::move(init), p0,
                                                   cfg.run.k_systems, cfg.run.tol_basis);
        hybrid = h.get();
        eval = std::move(h);
    }

    InverseProblem problem;
    problem.data = data.noisy;
    problem.noise_norm = data.noise_norm;
    problem.p0 = p0;
    problem.pals = &cfg.pals;

    TrustRegionOptions options;
    options.initial_radius = cfg.run.initial_radius;
    options.max_iterations = cfg.run.max_iterations;

    InvertOutcome outcome;
    outcome.result = solve_inverse(*eval, problem, options);
    outcome.noise_norm = data.noise_norm;
    outcome.full_order_solves = eval->full_order_solves;

    const Vec mu_rec = eval_absorption(cfg.pals, outcome.result.p, prob.nodes);
    write_pgm(join(out_dir, "recon.pgm"), interior_image(prob.grid, mu_rec), cfg.pals.mu_out,
              cfg.pals.mu_in);
    {
        std::vector<std::vector<std::string>> rows;
        for (Eigen::Index k = 0; k < outcome.result.p.size(); ++k)
            rows.push_back({int_cell(k), format_sci(outcome.result.p[k])});
        write_csv_rows(join(out_dir, "params.csv"), {"index", "value"}, rows);
    }
    write_trace(join(out_dir, "trace.csv"), outcome.result.trace);
    if (hybrid) {
        write_buildlog(join(out_dir, "buildlog.csv"), hybrid->build_log());
        write_basis(join(out_dir, "basis.romb"), hybrid->basis().V(), hybrid->basis().markers());
        outcome.basis_order = hybrid->basis().cols();
    }

    std::cout << "invert[" << mode << "]: converged=" << (outcome.result.converged ? 1 : 0)
              << " final_residual=" << format_sci(outcome.result.final_residual)
              << " target=" << format_sci(1.1 * data.noise_norm)
              << " function_evals=" << outcome.result.function_evals
              << " jacobian_evals=" << outcome.result.jacobian_evals
              << " full_order_solves=" << outcome.full_order_solves;
    if (hybrid) std::cout << " basis_order=" << outcome.basis_order;
    std::cout << "\n";
    return outcome;
}

CompareTotals cmd_compare_recycling(const ExperimentConfig& cfg, const std::string& out_dir) {
    ensure_dir(out_dir);
    Problem prob(cfg);
    const int n_rhs = prob.layout.n_src + prob.layout.n_det;

    const Vec p0 = parameter_in_sequence(cfg, 0);
    const Vec mu0 = prob.h2 * eval_absorption(cfg.pals, p0, prob.nodes);
    auto init = init_basis(prob.op, mu0, prob.layout.B_concat, cfg.run.k_eig, cfg.run.tol_basis);

    const Mat U0 = init.basis.V().leftCols(init.basis.eig_block());
    const Mat X0 = init.basis.V().middleCols(init.basis.eig_block(), n_rhs);
    BaselinePerRhsRecycler baseline(prob.op, U0, X0);

    GlobalBasis gb = init.basis;
    PerRhsSpaces spaces = init.spaces;

    std::vector<std::vector<std::string>> rows;
    CompareTotals totals;
    const int n_systems = std::min(cfg.run.k_systems, 2);
    for (int sys = 1; sys <= n_systems; ++sys) {
        const Vec p = parameter_in_sequence(cfg, sys);
        const Vec mu = prob.h2 * eval_absorption(cfg.pals, p, prob.nodes);
        auto ours = process_system(gb, spaces, prob.op, mu, prob.layout.B_concat,
                                   cfg.run.tol_basis, sys);
        auto base = baseline.solve_system(mu, prob.layout.B_concat, cfg.run.tol_basis, sys);
        for (int j = 0; j < n_rhs; ++j) {
            const auto& a = ours.log[static_cast<std::size_t>(j)];
            const auto& b = base.log[static_cast<std::size_t>(j)];
            rows.push_back({int_cell(sys), int_cell(j), int_cell(a.iterations),
                            format_sci(a.init_relres), int_cell(b.iterations),
                            format_sci(b.init_relres)});
            totals.ours += a.iterations;
            totals.baseline += b.iterations;
        }
    }
    rows.push_back({"total", "", int_cell(totals.ours), "", int_cell(totals.baseline), ""});
    write_csv_rows(join(out_dir, "compare_recycling.csv"),
                   {"system", "rhs", "its_ours", "init_relres_ours", "its_baseline",
                    "init_relres_baseline"},
                   rows);
    std::cout << "compare-recycling: ours=" << totals.ours << " baseline=" << totals.baseline
              << "\n";
    return totals;
}

bool cmd_offline(const ExperimentConfig& cfg, const std::string& out_dir) {
    ensure_dir(out_dir);
    const std::string manifest_path = join(out_dir, "offline_manifest.txt");
    const std::string u0_path = join(out_dir, "u0.romb");
    const std::string x0_path = join(out_dir, "x0.romb");
    const std::string hash = cfg.offline_hash();

    if (std::filesystem::exists(manifest_path) && std::filesystem::exists(u0_path) &&
        std::filesystem::exists(x0_path)) {
        const auto manifest = read_manifest(manifest_path);
        const auto it = manifest.find("hash");
        const auto tol_it = manifest.find("tol_basis");
        if (it != manifest.end() && it->second == hash && tol_it != manifest.end() &&
            tol_it->second == format_sci(cfg.run.tol_basis)) {
            std::cout << "offline: cached artifacts valid, skipping recompute\n";
            return true;
        }
    }

    Problem prob(cfg);
    const int n_rhs = prob.layout.n_src + prob.layout.n_det;
    const Vec p0 = parameter_in_sequence(cfg, 0);
    const Vec mu0 = prob.h2 * eval_absorption(cfg.pals, p0, prob.nodes);
    auto init = init_basis(prob.op, mu0, prob.layout.B_concat, cfg.run.k_eig, cfg.run.tol_basis);

    const Mat U0 = init.basis.V().leftCols(init.basis.eig_block());
    const Mat X0 = init.basis.V().middleCols(init.basis.eig_block(), n_rhs);
    write_basis(u0_path, U0,
                std::vector<std::uint8_t>(static_cast<std::size_t>(U0.cols()), kColEigenvector));
    write_basis(x0_path, X0,
                std::vector<std::uint8_t>(static_cast<std::size_t>(X0.cols()),
                                          kColInitialSolution));
    write_manifest(manifest_path, {{"hash", hash},
                                   {"k_eig", std::to_string(cfg.run.k_eig)},
                                   {"tol_basis", format_sci(cfg.run.tol_basis)},
                                   {"n", std::to_string(prob.op.dim())}});
    std::cout << "offline: wrote " << U0.cols() << " eigenvector and " << X0.cols()
              << " solution columns\n";
    return false;
}

int cmd_coeffs(const ExperimentConfig& cfg, const std::string& basis_path, int system_index,
               const std::string& out_dir) {
    ensure_dir(out_dir);
    auto [V, markers] = read_basis(basis_path);
    Problem prob(cfg);
    if (V.rows() != prob.op.dim())
        throw ConfigError("coeffs: basis dimension does not match the configured grid");

    const Vec p = parameter_in_sequence(cfg, system_index);
    const Vec mu = prob.h2 * eval_absorption(cfg.pals, p, prob.nodes);
    Eigen::SimplicialLDLT<SpMat> solver(prob.op.with_absorption(mu));
    if (solver.info() != Eigen::Success) throw SolverError("coeffs: factorization failed");
    const Mat X = solver.solve(prob.layout.B_concat);

    const Mat C = basis_coefficients(V, X);
    std::vector<std::string> header = {"rhs"};
    for (Eigen::Index r = 0; r < C.rows(); ++r) header.push_back("c" + std::to_string(r));
    std::vector<std::vector<std::string>> rows;
    for (Eigen::Index j = 0; j < C.cols(); ++j) {
        std::vector<std::string> row = {int_cell(j)};
        for (Eigen::Index r = 0; r < C.rows(); ++r) row.push_back(format_sci(std::abs(C(r, j))));
        rows.push_back(std::move(row));
    }
    write_csv_rows(join(out_dir, "coeffs.csv"), header, rows);
    std::cout << "coeffs: wrote " << C.cols() << " rows with " << C.rows() << " coefficients\n";
    return 0;
}

}  // namespace romdot
