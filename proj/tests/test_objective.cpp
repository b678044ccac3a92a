#include "exaug/objective.hpp"

#include "exaug/errors.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <random>

using namespace exaug;

TEST_CASE("rollout of zero commands stays at the origin") {
    const std::vector<VelocityCommand> cmds(8);
    const auto wps = rollout(cmds, 0.33);
    REQUIRE(wps.size() == 8);
    for (const Pose2D& wp : wps) {
        CHECK(wp.x == 0.0);
        CHECK(wp.y == 0.0);
        CHECK(wp.theta == 0.0);
    }
}

TEST_CASE("rollout of a straight unit-speed run covers v*N*dt") {
    std::vector<VelocityCommand> cmds(8, VelocityCommand{1.0, 0.0});
    const auto wps = rollout(cmds, 0.33);
    CHECK(wps.back().x == doctest::Approx(2.64).epsilon(1e-12));
    CHECK(wps.back().y == 0.0);
    CHECK(wps.back().theta == 0.0);
}

TEST_CASE("rollout converges to the closed-form arc as dt shrinks") {
    // v = w = 1 follows the unit circle: after time T the exact pose is
    // (sin T, 1 - cos T, T).
    const double T = 8 * 0.33;
    const auto euler_error = [&](double dt, int n) {
        std::vector<VelocityCommand> cmds(n, VelocityCommand{1.0, 1.0});
        const auto wps = rollout(cmds, dt);
        return std::hypot(wps.back().x - std::sin(T), wps.back().y - (1.0 - std::cos(T)));
    };
    // The fine-step reference bounds the coarse Euler error scale.
    std::vector<VelocityCommand> cmds(8, VelocityCommand{1.0, 1.0});
    const Pose2D fine = oracles::fine_rollout(cmds, 0.33, 1000);
    CHECK(std::hypot(fine.x - std::sin(T), fine.y - (1.0 - std::cos(T))) < 1e-3);

    const double coarse = euler_error(0.33, 8);
    CHECK(coarse < 0.5);                    // O(dt) at dt = 0.33
    CHECK(euler_error(0.033, 80) < coarse / 5.0); // first-order convergence
}

TEST_CASE("rollout rejects bad input") {
    std::vector<VelocityCommand> cmds(2);
    CHECK_THROWS_AS(rollout(cmds, 0.0), InvalidInput);
    cmds[1].v = std::nan("");
    CHECK_THROWS_AS(rollout(cmds, 0.33), InvalidInput);
}

TEST_CASE("j_pose is the squared final-position distance") {
    std::vector<Pose2D> wps = {Pose2D::make(0, 0, 0), Pose2D::make(1, 2, 0.4)};
    CHECK(j_pose(wps, Pose2D::make(1, 2, -1.0)) == 0.0);
    wps.back() = Pose2D::make(1, 0, 0);
    CHECK(j_pose(wps, Pose2D{}) == doctest::Approx(1.0));
    wps.back() = Pose2D::make(1, 2, 0);
    CHECK(j_pose(wps, Pose2D::make(4, 6, 0)) == doctest::Approx(25.0));
    CHECK_THROWS_AS(j_pose({}, Pose2D{}), InvalidInput);
}

TEST_CASE("j_diff sums squared consecutive differences") {
    CHECK(j_diff({{1, 0.5}, {1, 0.5}, {1, 0.5}}) == 0.0);
    CHECK(j_diff({{0, 0}, {1, 0}}) == doctest::Approx(1.0));
    CHECK(j_diff({{1, 0}, {-1, 0}, {1, 0}}) == doctest::Approx(8.0));
    CHECK(j_diff({{3, 3}}) == 0.0); // fewer than two commands
    CHECK(j_diff({}) == 0.0);
}

TEST_CASE("j_trav is the squared error sum") {
    CHECK(j_trav({1, 0, 1}, {1, 0, 1}) == 0.0);
    CHECK(j_trav({1, 1}, {0, 0}) == doctest::Approx(2.0));
    CHECK(j_trav({0.5}, {0.0}) == doctest::Approx(0.25));
    CHECK_THROWS_AS(j_trav({1}, {1, 0}), ShapeError);
}

TEST_CASE("j_geo handles empty masks and the centered point") {
    const std::vector<Pose2D> wps = {Pose2D::make(0.5, 0, 0)};
    GeoPoints none;
    CHECK(j_geo(wps, none, 0.5) == 0.0);

    GeoPoints single;
    single.xy.emplace_back(0.5, 0.0); // exactly at the waypoint
    single.z.push_back(0.4);
    single.weight.push_back(1.0);
    CHECK(j_geo(wps, single, 0.5) == doctest::Approx(0.25));

    // Far point: outside every disk.
    GeoPoints far;
    far.xy.emplace_back(10.0, 10.0);
    far.z.push_back(0.4);
    far.weight.push_back(1.0);
    CHECK(j_geo(wps, far, 0.5) == 0.0);
}

TEST_CASE("j_geo equals the scalar triple-loop oracle on random instances") {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    RobotParams params;
    for (int trial = 0; trial < 40; ++trial) {
        const PointCloud cloud = fixtures::random_cloud(rng, 24, 18, 2.0);
        const auto cmds = fixtures::random_commands(rng, 8, 1.0, 1.0);
        const auto wps = rollout(cmds, kDefaultDt);
        params.r_s = 0.2 + 0.8 * unit(rng);
        const double production = j_geo(wps, cloud, params);
        const double reference = oracles::j_geo_oracle(wps, cloud, params);
        CHECK(production == doctest::Approx(reference).epsilon(1e-12));
        CHECK(std::abs(production - reference) < 1e-9);
    }
}

TEST_CASE("j_geo is strictly positive iff a weighted band point is strictly inside") {
    std::mt19937_64 rng(11215);
    RobotParams params;
    params.r_s = 0.6;
    for (int trial = 0; trial < 25; ++trial) {
        const PointCloud cloud = fixtures::random_cloud(rng, 20, 16, 2.2);
        const auto cmds = fixtures::random_commands(rng, 8, 1.0, 1.2);
        const auto wps = rollout(cmds, kDefaultDt);
        const GeoPoints pts = collect_geo_points(cloud, params);
        bool inside_weighted = false;
        for (const Pose2D& wp : wps) {
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const double d = std::hypot(pts.xy[i].x() - wp.x, pts.xy[i].y() - wp.y);
                if (d < params.r_s && pts.weight[i] > 0.0 && d < params.r_s) inside_weighted = true;
            }
        }
        const double value = j_geo(wps, pts, params.r_s);
        CHECK(value >= 0.0);
        CHECK((value > 0.0) == inside_weighted);
    }
}

TEST_CASE("j_geo grows with r_s while the masked set is unchanged") {
    // Tight cluster near one waypoint; radii chosen so no new point enters
    // between evaluations, which isolates the (r_s - d)^2 growth.
    GeoPoints pts;
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> jitter(-0.1, 0.1);
    for (int i = 0; i < 12; ++i) {
        pts.xy.emplace_back(1.0 + jitter(rng), jitter(rng));
        pts.z.push_back(0.3);
        pts.weight.push_back(1.0);
    }
    const std::vector<Pose2D> wps = {Pose2D::make(1.0, 0.0, 0.0)};
    double prev = 0.0;
    for (const double r : {0.3, 0.5, 0.8, 1.0}) {
        const double value = j_geo(wps, pts, r);
        CHECK(value > prev);
        prev = value;
    }
}

TEST_CASE("all objective terms are invariant under a rigid frame change") {
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    RobotParams params;
    for (int trial = 0; trial < 20; ++trial) {
        const PointCloud cloud = fixtures::random_cloud(rng, 18, 14, 2.0);
        const auto cmds = fixtures::random_commands(rng, 8, 1.0, 1.0);
        const auto wps = rollout(cmds, kDefaultDt);
        const Pose2D goal = Pose2D::make(d(rng), d(rng), 0.0);

        const Pose2D frame = Pose2D::make(d(rng), d(rng), d(rng));
        const Transform3D frame3d = pose_to_transform(frame);
        const PointCloud moved_cloud = transform_cloud(cloud, frame3d);
        std::vector<Pose2D> moved_wps;
        for (const Pose2D& wp : wps) moved_wps.push_back(fixtures::compose_pose(frame, wp));
        const Pose2D moved_goal = fixtures::compose_pose(frame, goal);

        const GeoPoints pts = collect_geo_points(cloud, params);
        const GeoPoints moved_pts = collect_geo_points(moved_cloud, params);
        CHECK(j_geo(wps, pts, params.r_s) ==
              doctest::Approx(j_geo(moved_wps, moved_pts, params.r_s)).epsilon(1e-9));
        CHECK(j_pose(wps, goal) == doctest::Approx(j_pose(moved_wps, moved_goal)).epsilon(1e-9));

        const auto trav = traversability_gt(wps, pts, params.r_s_prime);
        const auto moved_trav = traversability_gt(moved_wps, moved_pts, params.r_s_prime);
        CHECK(trav == moved_trav);
    }
}

TEST_CASE("traversability_gt flags waypoints with nearby band points") {
    const std::vector<Pose2D> wps = {Pose2D::make(0.4, 0, 0), Pose2D::make(0.8, 0, 0),
                                     Pose2D::make(1.2, 0, 0)};
    GeoPoints empty;
    const auto clear = traversability_gt(wps, empty, 0.2);
    CHECK(clear == std::vector<double>{1.0, 1.0, 1.0});

    GeoPoints pts;
    pts.xy.emplace_back(0.8, 0.0); // exactly at waypoint 1
    pts.z.push_back(0.3);
    pts.weight.push_back(1.0);
    const auto blocked = traversability_gt(wps, pts, 0.2);
    CHECK(blocked == std::vector<double>{1.0, 0.0, 1.0});
}

TEST_CASE("all-clear traversability at r_s implies a zero collision cost") {
    std::mt19937_64 rng(31337);
    RobotParams params;
    params.r_s = 0.5;
    for (int trial = 0; trial < 25; ++trial) {
        const PointCloud cloud = fixtures::random_cloud(rng, 16, 12, 2.5);
        const auto cmds = fixtures::random_commands(rng, 8, 1.0, 1.0);
        const auto wps = rollout(cmds, kDefaultDt);
        const GeoPoints pts = collect_geo_points(cloud, params);
        const auto trav = traversability_gt(wps, pts, params.r_s);
        const bool all_clear = std::all_of(trav.begin(), trav.end(), [](double t) { return t == 1.0; });
        if (all_clear) CHECK(j_geo(wps, pts, params.r_s) == 0.0);
    }
}

TEST_CASE("total_objective composes its terms") {
    RobotParams params;
    const ObjectiveWeights weights;
    const PointCloud empty = PointCloud::invalid(4, 4, "robot");

    SUBCASE("all-zero instance sums to zero") {
        const std::vector<VelocityCommand> cmds(8);
        const auto out = total_objective(cmds, Pose2D{}, empty, params, weights, {}, {});
        CHECK(out.total == 0.0);
    }
    SUBCASE("zero weights leave only the pose term") {
        std::mt19937_64 rng(2);
        const auto cmds = fixtures::random_commands(rng, 8, 1.0, 1.0);
        const PointCloud cloud = fixtures::random_cloud(rng, 12, 10);
        const auto out =
            total_objective(cmds, Pose2D::make(2, 1, 0), cloud, params, ObjectiveWeights{0, 0, 0},
                            {1, 1}, {1, 0});
        CHECK(out.total == doctest::Approx(out.pose).epsilon(1e-15));
    }
    SUBCASE("random instances equal the independently recomputed sum") {
        std::mt19937_64 rng(88);
        for (int trial = 0; trial < 20; ++trial) {
            const auto cmds = fixtures::random_commands(rng, 8, 1.0, 1.0);
            const PointCloud cloud = fixtures::random_cloud(rng, 14, 12);
            const Pose2D goal = Pose2D::make(1.5, -0.5, 0.2);
            const std::vector<double> gt = {1, 0, 1, 1, 0, 1, 1, 1};
            const std::vector<double> pred = {1, 1, 1, 0, 0, 1, 0.5, 1};
            const auto out = total_objective(cmds, goal, cloud, params, weights, gt, pred);
            const auto wps = rollout(cmds, kDefaultDt);
            const double expected = j_pose(wps, goal) + weights.w_g * j_geo(wps, cloud, params) +
                                    weights.w_d * j_diff(cmds) + weights.w_t * j_trav(pred, gt);
            CHECK(out.total == doctest::Approx(expected).epsilon(1e-12));
            CHECK(std::abs(out.total - expected) < 1e-12);
        }
    }
}

TEST_CASE("breakdowns and trajectories serialize to the documented formats") {
    ObjectiveBreakdown b;
    b.pose = 1.5;
    b.geo = 0.25;
    b.total = 2.0;
    const std::string json = breakdown_to_json(b);
    CHECK(json.find("\"j_pose\": 1.5") != std::string::npos);
    CHECK(json.find("\"j_geo\": 0.25") != std::string::npos);
    CHECK(json.find("\"total\": 2.0") != std::string::npos);

    Trajectory traj;
    traj.commands = {{0.5, -0.1}};
    traj.waypoints = {Pose2D::make(0.165, 0, -0.033)};
    traj.traversability = {1.0};
    const std::string csv = trajectory_to_csv(traj);
    CHECK(csv.substr(0, 30) == "step,v,omega,x,y,theta,t\n1,0.5");
}
