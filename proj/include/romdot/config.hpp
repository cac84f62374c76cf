#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "romdot/grid.hpp"
#include "romdot/pals.hpp"
#include "romdot/types.hpp"

namespace romdot {

/// Flat key=value configuration with dotted section names (grid.nx=201).
class KeyValueConfig {
  public:
    static KeyValueConfig from_file(const std::string& path);
    static KeyValueConfig from_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, std::optional<double> fallback = {}) const;
    int get_int(const std::string& key, std::optional<int> fallback = {}) const;

    const std::map<std::string, std::string>& values() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

enum class PhantomKind { Disk, Annulus, Blobs };

struct PhantomSpec {
    PhantomKind kind = PhantomKind::Disk;
    double cx = 0.0, cy = 0.0;
    double radius = 1.0;
    double inner_radius = 0.5;
};

struct RunSettings {
    int k_systems = 3;       // K_*: full-order systems consumed by the basis build
    double tol_basis = 1e-7;
    double solver_tol = 1e-10;
    int max_iterations = 300;
    int k_eig = 10;
    std::uint64_t seed = 0;
    double noise_fraction = 0.01;
    double initial_radius = 1.0;
};

struct ExperimentConfig {
    GridConfig grid;
    int n_src = 8;
    int n_det = 8;
    PalsModel pals;
    double init_alpha = 0.6;
    double init_beta_scale = 1.1;  // bump radius = spacing / scale
    RunSettings run;
    PhantomSpec phantom;

    /// Default initial parameter vector: bumps on a uniform interior grid,
    /// equal weights, equal dilations.
    Vec initial_parameters() const;

    /// Stable hash over every field that affects offline artifacts.
    std::string offline_hash() const;
};

ExperimentConfig parse_experiment(const KeyValueConfig& kv);

/// Rasterized phantom absorption on the interior nodes (physical units,
/// deliberately outside the level-set image family).
Vec rasterize_phantom(const PhantomSpec& spec, const PalsModel& pals, const Mat& nodes);

/// Deterministic standard-normal stream (Box-Muller over a fixed xorshift
/// generator) so noisy data is byte-identical across platforms and runs.
class NormalStream {
  public:
    explicit NormalStream(std::uint64_t seed);
    double next();

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace romdot
