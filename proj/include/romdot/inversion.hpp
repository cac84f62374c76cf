#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "romdot/basis.hpp"
#include "romdot/grid.hpp"
#include "romdot/pals.hpp"
#include "romdot/rom.hpp"
#include "romdot/types.hpp"

namespace romdot {

/// Forward-model surface the optimizer talks to. Implementations count their
/// function/Jacobian evaluations and the interior-dimension solves they spend.
class ForwardEvaluator {
  public:
    virtual ~ForwardEvaluator() = default;
    virtual Mat transfer(const Vec& p) = 0;   // n_det x n_src
    virtual Mat jacobian(const Vec& p) = 0;   // (n_det*n_src) x n_params

    int function_evals = 0;
    int jacobian_evals = 0;
    long full_order_solves = 0;
};

struct ForwardSetup {
    const SchurOperator* op = nullptr;
    const SourceDetectorLayout* layout = nullptr;
    const PalsModel* pals = nullptr;
    Mat nodes;   // interior node coordinates
    double h2 = 0.0;
    FomSolve solve_mode = FomSolve::Direct;
    double solver_tol = 1e-10;
};

class FomEvaluator : public ForwardEvaluator {
  public:
    explicit FomEvaluator(ForwardSetup setup);
    Mat transfer(const Vec& p) override;
    Mat jacobian(const Vec& p) override;

  private:
    ForwardSetup s_;
};

class RomEvaluator : public ForwardEvaluator {
  public:
    RomEvaluator(ForwardSetup setup, std::shared_ptr<const ReducedModel> model);
    Mat transfer(const Vec& p) override;
    Mat jacobian(const Vec& p) override;

  private:
    ForwardSetup s_;
    std::shared_ptr<const ReducedModel> model_;
};

/// Feeds the first K_* distinct parameter vectors visited by the optimizer
/// through the recycling basis builder (reusing the solutions for the
/// optimizer's own evaluations), then switches to the reduced model.
class HybridEvaluator : public ForwardEvaluator {
  public:
    HybridEvaluator(ForwardSetup setup, InitBasisResult init, const Vec& p0, int k_systems,
                    double tol_basis);

    Mat transfer(const Vec& p) override;
    Mat jacobian(const Vec& p) override;

    const GlobalBasis& basis() const { return basis_; }
    const std::vector<BuildLogRow>& build_log() const { return log_; }
    /// p_0 followed by the K_* distinct parameter vectors fed to the builder.
    const std::vector<Vec>& visited_parameters() const { return visited_; }
    int systems_used() const { return systems_used_; }
    long appends() const { return appends_; }
    bool in_rom_mode() const { return rom_ != nullptr; }

  private:
    const Mat& solutions_for(const Vec& p);

    ForwardSetup s_;
    GlobalBasis basis_;
    PerRhsSpaces spaces_;
    std::vector<BuildLogRow> log_;
    std::vector<Vec> visited_;
    Vec p0_;
    int k_systems_;
    double tol_basis_;
    int systems_used_ = 0;
    long appends_ = 0;
    std::optional<Vec> cached_p_;
    Mat cached_X_;
    std::shared_ptr<ReducedModel> rom_;
};

struct TrustRegionOptions {
    double initial_radius = 1.0;
    double max_radius = 100.0;
    int max_iterations = 300;
    double gradient_tol = 1e-12;
    double step_tol = 1e-14;
    double shrink_threshold = 0.25;
    double grow_threshold = 0.75;
};

struct TraceRow {
    int iteration = 0;
    double residual_norm = 0.0;
    double trust_radius = 0.0;
    double step_norm = 0.0;
    bool accepted = false;
    int function_evals = 0;
    int jacobian_evals = 0;
};

struct InverseResult {
    Vec p;
    std::vector<TraceRow> trace;
    bool converged = false;
    double final_residual = 0.0;
    int function_evals = 0;
    int jacobian_evals = 0;
};

struct InverseProblem {
    Vec data;           // length n_det * n_src, detectors fastest
    double noise_norm = 0.0;
    Vec p0;
    const PalsModel* pals = nullptr;
};

/// res(p) = vec(Psi(0,p)) - data, column-major stacking of the transfer matrix.
Vec residual(ForwardEvaluator& eval, const Vec& p, const Vec& data);

/// Trust-region Gauss-Newton with a dogleg step on the normal-equations
/// model; stops at ||res|| <= 1.1 * noise_norm. Dilation parameters are
/// clamped below at 1e-6 before every model evaluation.
InverseResult solve_inverse(ForwardEvaluator& eval, const InverseProblem& problem,
                            const TrustRegionOptions& options = {});

}  // namespace romdot
