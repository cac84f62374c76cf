#pragma once

#include <memory>
#include <string>

#include "romdot/basis.hpp"
#include "romdot/config.hpp"
#include "romdot/grid.hpp"
#include "romdot/inversion.hpp"
#include "romdot/types.hpp"

namespace romdot {

/// Assembled pieces of one experiment, shared by every subcommand.
struct Problem {
    Grid grid;
    BlockSystem blocks;
    SchurOperator op;
    SourceDetectorLayout layout;
    Mat nodes;
    double h2 = 0.0;

    explicit Problem(const ExperimentConfig& cfg);
};

struct SimulatedData {
    Vec mu_truth;    // physical absorption on interior nodes
    Vec clean;       // vec(Psi), detectors fastest
    Vec noisy;
    double noise_norm = 0.0;
};

/// Rasterized-phantom measurements with per-entry relative Gaussian noise,
/// fully determined by the config (including the seed).
SimulatedData simulate_data(const ExperimentConfig& cfg, const Problem& prob);

/// Interior absorption values as an image matrix (top row of the slab first).
Mat interior_image(const Grid& grid, const Vec& mu);

/// Deterministic parameter sequence p_0, p_1, ...: p_0 is the standard
/// initial guess; later entries perturb weights and centers with draws from a
/// stream seeded by (config seed, index).
Vec parameter_in_sequence(const ExperimentConfig& cfg, int index);

int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir);

struct InvertOutcome {
    InverseResult result;
    double noise_norm = 0.0;
    long full_order_solves = 0;
    int basis_order = 0;  // hybrid only
};

InvertOutcome cmd_invert(const ExperimentConfig& cfg, const std::string& mode,
                         const std::string& out_dir);

struct CompareTotals {
    long ours = 0;
    long baseline = 0;
};

CompareTotals cmd_compare_recycling(const ExperimentConfig& cfg, const std::string& out_dir);

/// Returns true if cached artifacts were reused, false if recomputed.
bool cmd_offline(const ExperimentConfig& cfg, const std::string& out_dir);

int cmd_coeffs(const ExperimentConfig& cfg, const std::string& basis_path, int system_index,
               const std::string& out_dir);

}  // namespace romdot
