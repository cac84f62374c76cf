#include "romdot/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace romdot {

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str());
}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        cfg.values_[key] = value;
    }
    return cfg;
}

std::string KeyValueConfig::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required config key: " + key);
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, std::optional<double> fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        if (fallback) return *fallback;
        throw ConfigError("missing required config key: " + key);
    }
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(it->second, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not a number: " + it->second);
    }
    if (pos != it->second.size())
        throw ConfigError("config key " + key + ": trailing characters in: " + it->second);
    return v;
}

int KeyValueConfig::get_int(const std::string& key, std::optional<int> fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        if (fallback) return *fallback;
        throw ConfigError("missing required config key: " + key);
    }
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(it->second, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not an integer: " + it->second);
    }
    if (pos != it->second.size())
        throw ConfigError("config key " + key + ": trailing characters in: " + it->second);
    return static_cast<int>(v);
}

ExperimentConfig parse_experiment(const KeyValueConfig& kv) {
    ExperimentConfig cfg;

    cfg.grid.nx = kv.get_int("grid.nx", 41);
    cfg.grid.ny = kv.get_int("grid.ny", 41);
    cfg.grid.a1 = kv.get_double("grid.a1", 0.0);
    cfg.grid.b1 = kv.get_double("grid.b1", 4.0);
    cfg.grid.a3 = kv.get_double("grid.a3", 0.0);
    cfg.grid.b3 = kv.get_double("grid.b3", 4.0);
    cfg.grid.diffusion = kv.get_double("grid.diffusion", 0.3);
    cfg.grid.boundary_constant = kv.get_double("grid.boundary_constant", 1.0);
    cfg.grid.speed = kv.get_double("grid.speed", 1.0);
    cfg.grid.validate();

    cfg.n_src = kv.get_int("layout.n_src", 8);
    cfg.n_det = kv.get_int("layout.n_det", 8);
    if (cfg.n_src < 1 || cfg.n_det < 1)
        throw ConfigError("layout: n_src and n_det must be positive");
    if (cfg.n_src > cfg.grid.nx - 2 || cfg.n_det > cfg.grid.nx - 2)
        throw ConfigError("layout: more sources or detectors than non-corner top/bottom nodes");

    cfg.pals.m_bumps = kv.get_int("pals.m_bumps", 9);
    cfg.pals.mu_in = kv.get_double("pals.mu_in", 0.5);
    cfg.pals.mu_out = kv.get_double("pals.mu_out", 0.05);
    cfg.pals.eps_heaviside = kv.get_double("pals.eps_heaviside", 0.05);
    cfg.pals.eps_norm = kv.get_double("pals.eps_norm", 4e-3);
    cfg.pals.level = kv.get_double("pals.level", 0.0);
    if (cfg.pals.m_bumps < 1) throw ConfigError("pals.m_bumps must be positive");
    if (cfg.pals.mu_in <= cfg.pals.mu_out)
        throw ConfigError("pals.mu_in must exceed pals.mu_out");
    cfg.init_alpha = kv.get_double("pals.init_alpha", 0.6);
    cfg.init_beta_scale = kv.get_double("pals.init_beta_scale", 1.1);

    cfg.run.k_systems = kv.get_int("run.k_systems", 3);
    cfg.run.tol_basis = kv.get_double("run.tol_basis", 1e-7);
    cfg.run.solver_tol = kv.get_double("run.solver_tol", 1e-10);
    cfg.run.max_iterations = kv.get_int("run.max_iterations", 300);
    cfg.run.k_eig = kv.get_int("run.k_eig", 10);
    cfg.run.seed = static_cast<std::uint64_t>(kv.get_int("run.seed"));  // mandatory
    cfg.run.noise_fraction = kv.get_double("run.noise_fraction", 0.01);
    cfg.run.initial_radius = kv.get_double("run.initial_radius", 1.0);
    if (cfg.run.k_systems < 1) throw ConfigError("run.k_systems must be positive");
    if (cfg.run.tol_basis <= 0.0 || cfg.run.solver_tol <= 0.0)
        throw ConfigError("run tolerances must be positive");
    if (cfg.run.noise_fraction < 0.0) throw ConfigError("run.noise_fraction must be nonnegative");

    const std::string kind = kv.get_string("phantom.kind", "disk");
    if (kind == "disk")
        cfg.phantom.kind = PhantomKind::Disk;
    else if (kind == "annulus")
        cfg.phantom.kind = PhantomKind::Annulus;
    else if (kind == "blobs")
        cfg.phantom.kind = PhantomKind::Blobs;
    else
        throw ConfigError("phantom.kind must be disk, annulus, or blobs");
    const double mid_x = 0.5 * (cfg.grid.a1 + cfg.grid.b1);
    const double mid_y = 0.5 * (cfg.grid.a3 + cfg.grid.b3);
    const double extent = 0.5 * std::min(cfg.grid.b1 - cfg.grid.a1, cfg.grid.b3 - cfg.grid.a3);
    cfg.phantom.cx = kv.get_double("phantom.cx", mid_x);
    cfg.phantom.cy = kv.get_double("phantom.cy", mid_y);
    cfg.phantom.radius = kv.get_double("phantom.radius", 0.45 * extent);
    cfg.phantom.inner_radius = kv.get_double("phantom.inner_radius", 0.22 * extent);
    if (cfg.phantom.radius <= 0.0) throw ConfigError("phantom.radius must be positive");

    return cfg;
}

Vec ExperimentConfig::initial_parameters() const {
    const int m = pals.m_bumps;
    int side = static_cast<int>(std::llround(std::floor(std::sqrt(static_cast<double>(m)))));
    while (side * side < m) ++side;

    const double w = grid.b1 - grid.a1;
    const double hgt = grid.b3 - grid.a3;
    const double dx = w / (side + 1);
    const double dy = hgt / (side + 1);
    const double spacing = std::min(dx, dy);

    Vec p(pals.n_params());
    for (int j = 0; j < m; ++j) {
        const int gi = j % side;
        const int gj = j / side;
        p[j] = init_alpha;
        p[m + j] = init_beta_scale / spacing;
        p[2 * m + 2 * j] = grid.a1 + (gi + 1) * dx;
        p[2 * m + 2 * j + 1] = grid.a3 + (gj + 1) * dy;
    }
    return p;
}

namespace {

void hash_mix(std::uint64_t& h, const std::string& token) {
    for (const unsigned char c : token) {
        h ^= c;
        h *= 0x100000001b3ull;  // FNV-1a
    }
    h ^= '|';
    h *= 0x100000001b3ull;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string ExperimentConfig::offline_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& t :
         {std::to_string(grid.nx), std::to_string(grid.ny), num(grid.a1), num(grid.b1),
          num(grid.a3), num(grid.b3), num(grid.diffusion), num(grid.boundary_constant),
          std::to_string(n_src), std::to_string(n_det), std::to_string(pals.m_bumps),
          num(pals.mu_in), num(pals.mu_out), num(pals.eps_heaviside), num(pals.eps_norm),
          num(pals.level), num(init_alpha), num(init_beta_scale), std::to_string(run.k_eig),
          num(run.solver_tol)})
        hash_mix(h, t);
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Vec rasterize_phantom(const PhantomSpec& spec, const PalsModel& pals, const Mat& nodes) {
    const auto n = nodes.rows();
    Vec mu = Vec::Constant(n, pals.mu_out);
    const double contrast = pals.mu_in - pals.mu_out;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double dx = nodes(i, 0) - spec.cx;
        const double dy = nodes(i, 1) - spec.cy;
        const double r = std::hypot(dx, dy);
        bool inside = false;
        switch (spec.kind) {
            case PhantomKind::Disk:
                inside = r <= spec.radius;
                break;
            case PhantomKind::Annulus:
                inside = r <= spec.radius && r >= spec.inner_radius;
                break;
            case PhantomKind::Blobs: {
                // Two offset disks of unequal size around the nominal center.
                const double d1 = std::hypot(dx + 0.6 * spec.radius, dy + 0.4 * spec.radius);
                const double d2 = std::hypot(dx - 0.7 * spec.radius, dy - 0.5 * spec.radius);
                inside = d1 <= 0.8 * spec.radius || d2 <= 0.55 * spec.radius;
                break;
            }
        }
        if (inside) mu[i] += contrast;
    }
    return mu;
}

NormalStream::NormalStream(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

double NormalStream::next() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    auto uniform = [this]() {
        // xorshift64*, top 53 bits mapped to (0, 1].
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        const std::uint64_t z = state_ * 0x2545f4914f6cdd1dull;
        return (static_cast<double>(z >> 11) + 1.0) * 0x1.0p-53;
    };
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
}

}  // namespace romdot
