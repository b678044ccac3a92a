#include "exaug/optimizer.hpp"

#include "exaug/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace exaug {

namespace {

double clamped_atanh(double x) {
    const double c = std::clamp(x, -0.999999, 0.999999);
    return 0.5 * std::log((1.0 + c) / (1.0 - c));
}

} // namespace

std::vector<VelocityCommand> parameterize(std::span<const double> raw, double v_max,
                                          double omega_max, bool forward_only) {
    if (raw.size() % 2 != 0) throw InvalidInput("parameterize: raw parameter count must be even");
    std::vector<VelocityCommand> commands(raw.size() / 2);
    for (std::size_t i = 0; i < commands.size(); ++i) {
        if (!std::isfinite(raw[2 * i]) || !std::isfinite(raw[2 * i + 1])) {
            throw InvalidInput("parameterize: non-finite raw parameter");
        }
        const double tv = std::tanh(raw[2 * i]);
        commands[i].v = forward_only ? v_max * (tv + 1.0) * 0.5 : v_max * tv;
        commands[i].omega = omega_max * std::tanh(raw[2 * i + 1]);
    }
    return commands;
}

std::vector<double> unparameterize(const std::vector<VelocityCommand>& commands, double v_max,
                                   double omega_max, bool forward_only) {
    std::vector<double> raw(2 * commands.size());
    for (std::size_t i = 0; i < commands.size(); ++i) {
        const double vn = forward_only ? 2.0 * commands[i].v / v_max - 1.0 : commands[i].v / v_max;
        raw[2 * i] = clamped_atanh(vn);
        raw[2 * i + 1] = clamped_atanh(commands[i].omega / omega_max);
    }
    return raw;
}

TrajectoryObjective::TrajectoryObjective(const OptimizeInstance& instance, bool forward_only)
    : goal_(instance.goal),
      points_(collect_geo_points(instance.cloud, instance.params)),
      params_(instance.params),
      weights_(instance.weights),
      horizon_(instance.horizon),
      dt_(instance.dt),
      forward_only_(forward_only) {
    if (horizon_ < 1) throw InvalidInput("TrajectoryObjective: horizon must be at least 1");
    if (!(dt_ > 0.0)) throw InvalidInput("TrajectoryObjective: dt must be positive");
}

std::vector<VelocityCommand> TrajectoryObjective::commands(std::span<const double> raw) const {
    return parameterize(raw, params_.v_max, params_.omega_max, forward_only_);
}

ObjectiveBreakdown TrajectoryObjective::breakdown(std::span<const double> raw) const {
    const std::vector<VelocityCommand> cmds = commands(raw);
    const std::vector<Pose2D> waypoints = rollout(cmds, dt_);
    ObjectiveBreakdown out;
    out.pose = j_pose(waypoints, goal_);
    out.geo = j_geo(waypoints, points_, params_.r_s);
    out.diff = j_diff(cmds);
    out.trav = 0.0;
    out.total = out.pose + weights_.w_g * out.geo + weights_.w_d * out.diff;
    return out;
}

double TrajectoryObjective::value(std::span<const double> raw) const {
    return breakdown(raw).total;
}

GeoMask TrajectoryObjective::mask_at(std::span<const double> raw) const {
    return geo_mask(rollout(commands(raw), dt_), points_, params_.r_s);
}

double TrajectoryObjective::value_frozen(std::span<const double> raw, const GeoMask& mask) const {
    const std::vector<VelocityCommand> cmds = commands(raw);
    const std::vector<Pose2D> waypoints = rollout(cmds, dt_);
    return j_pose(waypoints, goal_) + weights_.w_g * j_geo_frozen(waypoints, points_, mask, params_.r_s) +
           weights_.w_d * j_diff(cmds);
}

std::vector<double> TrajectoryObjective::gradient(std::span<const double> raw) const {
    return gradient(raw, mask_at(raw));
}

std::vector<double> TrajectoryObjective::gradient_impl(std::span<const double> raw,
                                                       const GeoMask& mask, double pose_scale,
                                                       double geo_scale, double diff_scale) const {
    const std::vector<VelocityCommand> cmds = commands(raw);
    const std::size_t n = cmds.size();
    const std::vector<Pose2D> waypoints = rollout(cmds, dt_);

    // Adjoints of the waypoint states. Index k holds the pose after command
    // k+1; index 0 is the fixed origin.
    std::vector<double> xbar(n + 1, 0.0), ybar(n + 1, 0.0), tbar(n + 1, 0.0);

    // j_pose seeds the final position.
    xbar[n] += pose_scale * 2.0 * (waypoints.back().x - goal_.x);
    ybar[n] += pose_scale * 2.0 * (waypoints.back().y - goal_.y);

    // Frozen-mask collision term seeds every waypoint it touches.
    if (geo_scale != 0.0 && mask.count() > 0) {
        const double scale = geo_scale / static_cast<double>(mask.count());
        for (const auto& [k, i] : mask.active) {
            const Pose2D& wp = waypoints[k];
            const double px = points_.xy[i].x();
            const double py = points_.xy[i].y();
            const double d = std::hypot(px - wp.x, py - wp.y);
            if (d < 1e-12) continue; // subgradient 0 at the singular center
            const double common = scale * points_.weight[i] * 2.0 * (params_.r_s - d) / d;
            xbar[k + 1] += common * (px - wp.x);
            ybar[k + 1] += common * (py - wp.y);
        }
    }

    // Backward pass through the Euler recurrence.
    std::vector<double> dv(n, 0.0), dw(n, 0.0);
    for (std::size_t k = n; k-- > 0;) {
        const double theta_prev = k == 0 ? 0.0 : waypoints[k - 1].theta;
        const double ct = std::cos(theta_prev);
        const double st = std::sin(theta_prev);
        dv[k] = xbar[k + 1] * ct * dt_ + ybar[k + 1] * st * dt_;
        dw[k] = tbar[k + 1] * dt_;
        xbar[k] += xbar[k + 1];
        ybar[k] += ybar[k + 1];
        tbar[k] += tbar[k + 1] +
                   xbar[k + 1] * (-cmds[k].v * st * dt_) + ybar[k + 1] * (cmds[k].v * ct * dt_);
    }

    // Smoothness term acts on the commands directly.
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double gdv = 2.0 * (cmds[i + 1].v - cmds[i].v) * diff_scale;
        const double gdw = 2.0 * (cmds[i + 1].omega - cmds[i].omega) * diff_scale;
        dv[i] -= gdv;
        dv[i + 1] += gdv;
        dw[i] -= gdw;
        dw[i + 1] += gdw;
    }

    // Chain through the tanh constraint mapping.
    std::vector<double> grad(2 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double tv = std::tanh(raw[2 * i]);
        const double tw = std::tanh(raw[2 * i + 1]);
        const double dv_draw = params_.v_max * (1.0 - tv * tv) * (forward_only_ ? 0.5 : 1.0);
        const double dw_draw = params_.omega_max * (1.0 - tw * tw);
        grad[2 * i] = dv[i] * dv_draw;
        grad[2 * i + 1] = dw[i] * dw_draw;
    }
    return grad;
}

std::vector<double> TrajectoryObjective::gradient(std::span<const double> raw,
                                                  const GeoMask& mask) const {
    return gradient_impl(raw, mask, 1.0, weights_.w_g, weights_.w_d);
}

std::vector<double> TrajectoryObjective::geo_gradient(std::span<const double> raw,
                                                      const GeoMask& mask) const {
    return gradient_impl(raw, mask, 0.0, weights_.w_g, 0.0);
}

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Constant-command arc through `goal` (straight line when it lies dead
// ahead), clamped inside the velocity box.
std::vector<double> arc_initializer(const OptimizeInstance& instance, const Pose2D& goal,
                                    bool forward_only) {
    const double gx = goal.x;
    const double gy = goal.y;
    const double dist = std::hypot(gx, gy);
    std::vector<VelocityCommand> cmds(static_cast<std::size_t>(instance.horizon));
    if (dist > 1e-9 && std::isfinite(dist)) {
        const double phi = std::atan2(gy, gx);
        const double arc_len = std::abs(phi) > 1e-6 ? dist * phi / std::sin(phi) : dist;
        const double duration = instance.horizon * instance.dt;
        const double v_lo = forward_only ? 0.05 * instance.params.v_max : -0.95 * instance.params.v_max;
        const double v = std::clamp(arc_len / duration, v_lo, 0.95 * instance.params.v_max);
        const double curvature = 2.0 * (gy / dist) / dist;
        const double omega = std::clamp(curvature * v, -0.95 * instance.params.omega_max,
                                        0.95 * instance.params.omega_max);
        if (std::isfinite(v) && std::isfinite(omega)) {
            for (auto& c : cmds) {
                c.v = v;
                c.omega = omega;
            }
        }
    }
    return unparameterize(cmds, instance.params.v_max, instance.params.omega_max, forward_only);
}

// Restarts fan out over detour headings: restart k arcs toward the goal
// rotated about the origin by 0, +0.9, -0.9, +1.8, ... rad. The collision
// term is nonconvex (a blocked straight shot needs a committed left or right
// detour), so heading diversity matters more than noise magnitude.
Pose2D rotated_goal(const Pose2D& goal, int restart) {
    if (restart == 0) return goal;
    const int ring = (restart + 1) / 2;
    const double delta = (restart % 2 == 1 ? 1.0 : -1.0) * 0.9 * ring;
    const double c = std::cos(delta);
    const double s = std::sin(delta);
    return Pose2D{c * goal.x - s * goal.y, s * goal.x + c * goal.y, goal.theta};
}

} // namespace

OptimizationResult optimize(const OptimizeInstance& instance, const OptimizerConfig& config) {
    if (config.restarts < 1) throw InvalidInput("optimize: need at least one restart");
    if (!(config.learning_rate > 0.0)) throw InvalidInput("optimize: learning rate must be positive");
    if (config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 || config.beta2 >= 1.0) {
        throw InvalidInput("optimize: Adam betas must lie in [0, 1)");
    }

    const TrajectoryObjective objective(instance, config.forward_only);
    const std::size_t dim = objective.parameter_count();

    bool any_finite = false;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<double> best_raw;
    int best_iters = 0;
    bool best_converged = false;
    int best_restart = 0;

    for (int restart = 0; restart < config.restarts; ++restart) {
        std::vector<double> raw =
            arc_initializer(instance, rotated_goal(instance.goal, restart), config.forward_only);
        if (restart > 0) {
            std::mt19937_64 rng(mix64(config.seed ^ mix64(static_cast<std::uint64_t>(restart))));
            std::normal_distribution<double> noise(0.0, config.restart_spread);
            for (double& r : raw) r += noise(rng);
        }

        std::vector<double> m(dim, 0.0), vmom(dim, 0.0);
        double restart_best = objective.value(raw);
        if (!std::isfinite(restart_best)) continue;
        std::vector<double> restart_best_raw = raw;
        bool converged = false;
        int iters = 0;
        int stall = 0;

        for (int iter = 1; iter <= config.max_iters; ++iter) {
            iters = iter;
            const GeoMask mask = objective.mask_at(raw);
            const std::vector<double> grad = objective.gradient(raw, mask);

            const double bc1 = 1.0 - std::pow(config.beta1, iter);
            const double bc2 = 1.0 - std::pow(config.beta2, iter);
            for (std::size_t i = 0; i < dim; ++i) {
                m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
                vmom[i] = config.beta2 * vmom[i] + (1.0 - config.beta2) * grad[i] * grad[i];
                const double mhat = m[i] / bc1;
                const double vhat = vmom[i] / bc2;
                raw[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
            }

            const double value = objective.value(raw);
            if (!std::isfinite(value)) break;
            const double significant =
                config.convergence_tol * std::max(std::abs(restart_best), 1e-12);
            if (value < restart_best - significant) {
                stall = 0;
            } else if (++stall >= config.patience) {
                // Adam oscillates, so convergence is a sustained lack of
                // tol-sized improvement rather than one small step.
                if (value < restart_best) {
                    restart_best = value;
                    restart_best_raw = raw;
                }
                converged = true;
                break;
            }
            if (value < restart_best) {
                restart_best = value;
                restart_best_raw = raw;
            }
        }

        if (!std::isfinite(restart_best)) continue;
        any_finite = true;
        if (restart_best < best_value) {
            best_value = restart_best;
            best_raw = std::move(restart_best_raw);
            best_iters = iters;
            best_converged = converged;
            best_restart = restart;
        }
    }

    if (!any_finite) throw OptimizationFailure("optimize: all restarts produced non-finite objectives");

    // Feasibility polish: a quadratic hinge leaves the converged solution a
    // hair inside the collision boundary whenever the constraint is active.
    // When a mask-free trajectory exists within a negligible objective
    // change, return that one.
    {
        const double before = objective.value(best_raw);
        if (objective.breakdown(best_raw).geo > 0.0) {
            std::vector<double> polished = best_raw;
            for (int it = 0; it < 200; ++it) {
                const GeoMask mask = objective.mask_at(polished);
                if (mask.count() == 0) break;
                std::vector<double> grad = objective.geo_gradient(polished, mask);
                double norm = 0.0;
                for (const double g : grad) norm += g * g;
                norm = std::sqrt(norm);
                if (!(norm > 1e-15)) break;
                for (std::size_t i = 0; i < polished.size(); ++i) {
                    polished[i] -= 0.01 * grad[i] / norm;
                }
            }
            const double after = objective.value(polished);
            const bool mask_free = objective.breakdown(polished).geo == 0.0;
            if (mask_free && std::isfinite(after) &&
                after <= before + 1e-2 * std::max(1.0, std::abs(before))) {
                best_raw = std::move(polished);
                best_value = after;
            }
        }
    }

    OptimizationResult result;
    result.trajectory.commands = objective.commands(best_raw);
    result.trajectory.waypoints = rollout(result.trajectory.commands, instance.dt);
    result.trajectory.traversability =
        traversability_gt(result.trajectory.waypoints, objective.geo_points(), instance.params.r_s_prime);
    result.breakdown = objective.breakdown(best_raw);
    result.final_objective = result.breakdown.total;
    result.iterations = best_iters;
    result.converged = best_converged;
    result.restart_index = best_restart;
    return result;
}

std::vector<OptimizationResult> omega_sweep(const OptimizeInstance& instance,
                                            const std::vector<double>& omega_values,
                                            const OptimizerConfig& config) {
    std::vector<OptimizationResult> results;
    results.reserve(omega_values.size());
    for (const double omega : omega_values) {
        if (!(omega > 0.0)) throw InvalidInput("omega_sweep: omega bounds must be positive");
        OptimizeInstance modified = instance;
        modified.params.omega_max = omega;
        results.push_back(optimize(modified, config));
    }
    return results;
}

} // namespace exaug
