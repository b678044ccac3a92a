#pragma once

#include "exaug/objective.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace exaug {

struct OptimizerConfig {
    double learning_rate = 1e-3;
    int max_iters = 500;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double convergence_tol = 1e-6; // relative objective decrease
    int patience = 60;             // iterations without a tol-sized improvement
    int restarts = 4;
    std::uint64_t seed = 7;
    double restart_spread = 0.0;   // optional extra raw-space noise stddev
    bool forward_only = false;     // map linear velocity to [0, v_max]
};

struct OptimizeInstance {
    Pose2D goal;
    PointCloud cloud; // robot frame
    RobotParams params;
    ObjectiveWeights weights;
    int horizon = kDefaultHorizon;
    double dt = kDefaultDt;
};

struct OptimizationResult {
    Trajectory trajectory;
    double final_objective = 0.0;
    ObjectiveBreakdown breakdown;
    int iterations = 0;
    bool converged = false;
    int restart_index = 0;
};

/// Maps unconstrained raw pairs (v_0, w_0, v_1, w_1, ...) onto commands with
/// a scaled tanh, so the box constraints hold by construction. Forward-only
/// mode maps the linear channel through (tanh + 1) / 2 instead.
std::vector<VelocityCommand> parameterize(std::span<const double> raw, double v_max,
                                          double omega_max, bool forward_only = false);

/// Inverse of parameterize (clamped away from the asymptotes).
std::vector<double> unparameterize(const std::vector<VelocityCommand>& commands, double v_max,
                                   double omega_max, bool forward_only = false);

/// The optimization objective over raw command parameters:
/// j_pose + w_g j_geo + w_d j_diff after tanh scaling and rollout.
/// Traversability is not part of the optimized objective; it is evaluated
/// geometrically on the result.
class TrajectoryObjective {
  public:
    TrajectoryObjective(const OptimizeInstance& instance, bool forward_only = false);

    std::size_t parameter_count() const { return 2 * static_cast<std::size_t>(horizon_); }

    double value(std::span<const double> raw) const;
    ObjectiveBreakdown breakdown(std::span<const double> raw) const;

    GeoMask mask_at(std::span<const double> raw) const;
    /// Value with the collision mask (and its normalizer) frozen to `mask`.
    /// Equals value(raw) when mask == mask_at(raw).
    double value_frozen(std::span<const double> raw, const GeoMask& mask) const;

    /// Exact reverse-mode gradient with the mask frozen at the evaluation
    /// point (the collision term stays differentiable in the distances).
    std::vector<double> gradient(std::span<const double> raw) const;
    std::vector<double> gradient(std::span<const double> raw, const GeoMask& mask) const;

    /// Gradient of the weighted collision term alone, used by the
    /// feasibility polish.
    std::vector<double> geo_gradient(std::span<const double> raw, const GeoMask& mask) const;

    const GeoPoints& geo_points() const { return points_; }
    std::vector<VelocityCommand> commands(std::span<const double> raw) const;

  private:
    std::vector<double> gradient_impl(std::span<const double> raw, const GeoMask& mask,
                                      double pose_scale, double geo_scale, double diff_scale) const;

    Pose2D goal_;
    GeoPoints points_;
    RobotParams params_;
    ObjectiveWeights weights_;
    int horizon_;
    double dt_;
    bool forward_only_;
};

/// Minimizes the trajectory objective with Adam under the tanh constraint
/// mapping. Restart 0 starts from an arc toward the goal; later restarts add
/// seeded raw-space perturbations. Returns the best restart.
OptimizationResult optimize(const OptimizeInstance& instance, const OptimizerConfig& config);

/// One optimization per angular velocity bound.
std::vector<OptimizationResult> omega_sweep(const OptimizeInstance& instance,
                                            const std::vector<double>& omega_values,
                                            const OptimizerConfig& config);

} // namespace exaug
