/* planner.cpp */

#include "vrvm/planner.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace vrvm {

void ValidatePlannerConfig(const PlannerConfig& config)
{
    if (!(config.mRrtStep > 0.0) || !(config.mSampleRadius > 0.0) ||
        !(config.mReachTolXy > 0.0) || !(config.mKeyframeSpacing > 0.0))
        throw InvalidInput("PlannerConfig: geometry must be positive");
    if (!(config.mInflation >= 0.0) || !(config.mUnknownOkRadius >= 0.0))
        throw InvalidInput("PlannerConfig: negative clearance radius");
    if (config.mMaxIterations < 1 || config.mMaxPaths < 1 ||
        config.mShortcutIterations < 0)
        throw InvalidInput("PlannerConfig: bad iteration budget");
    if (!(config.mGoalBias >= 0.0) || !(config.mGoalBias < 1.0))
        throw InvalidInput("PlannerConfig: goal bias outside [0, 1)");
    if (!(config.mAlpha >= 0.0) || !(config.mBeta >= 0.0) ||
        !(config.mGd >= 0.0))
        throw InvalidInput("PlannerConfig: weights must be non-negative");
    if (!(config.mGamma > 0.0) || config.mGamma > 1.0)
        throw InvalidInput("PlannerConfig: discount outside (0, 1]");
    if (!(config.mLambdaMap >= 0.0))
        throw InvalidInput("PlannerConfig: negative mapping weight");
}

double PathLength(const std::vector<Vec2>& path)
{
    double length = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        length += (path[i + 1] - path[i]).norm();
    return length;
}

std::vector<Vec2> ResampleByArcLength(const std::vector<Vec2>& path,
                                      const double spacing)
{
    if (path.empty())
        throw InvalidInput("ResampleByArcLength: empty path");
    if (!(spacing > 0.0))
        throw InvalidInput("ResampleByArcLength: spacing must be positive");

    std::vector<Vec2> samples { path.front() };
    double need = spacing;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const Vec2 a = path[i];
        const Vec2 b = path[i + 1];
        const double length = (b - a).norm();
        if (length < 1.0e-12)
            continue;
        double done = 0.0;
        while (length - done >= need) {
            done += need;
            samples.push_back(a + (done / length) * (b - a));
            need = spacing;
        }
        need -= length - done;
    }
    if ((samples.back() - path.back()).norm() > 1.0e-9)
        samples.push_back(path.back());
    return samples;
}

HypotheticalExtension BuildExtension(const PoseGraph& graph,
                                     const std::vector<Vec2>& samples,
                                     const std::vector<int>& structureNodes,
                                     const PredictionModel& prediction)
{
    if (samples.empty())
        throw InvalidInput("BuildExtension: no sample poses");

    const int baseId = graph.NodeCount();
    const Pose2 anchor = graph.Node(baseId - 1).mEstimate;

    HypotheticalExtension extension;
    Pose2 previous = anchor;
    double heading = anchor.mPsi;
    for (std::size_t k = 1; k < samples.size(); ++k) {
        const Vec2 delta = samples[k] - samples[k - 1];
        if (delta.norm() > 1.0e-12)
            heading = std::atan2(delta.y(), delta.x());
        const Pose2 pose(samples[k].x(), samples[k].y(), heading);
        const int id = baseId + static_cast<int>(extension.mPoses.size());

        Factor odometry;
        odometry.mKind = FactorKind::Odometry;
        odometry.mI = id - 1;
        odometry.mJ = id;
        odometry.mMeasurement = Between(previous, pose);
        odometry.mInfo = prediction.mOdometryInfo;
        extension.mFactors.push_back(odometry);
        extension.mPoses.push_back(pose);

        /* Predicted closure against the nearest structure keyframe in
         * reach, confirming the current estimates */
        int bestNode = -1;
        double bestDist = prediction.mClosureRadius;
        for (const int nodeId : structureNodes) {
            const Pose2& node = graph.Node(nodeId).mEstimate;
            const double dist =
                std::hypot(node.mX - pose.mX, node.mY - pose.mY);
            if (dist <= bestDist && (bestNode < 0 || dist < bestDist)) {
                bestDist = dist;
                bestNode = nodeId;
            }
        }
        if (bestNode >= 0) {
            Factor closure;
            closure.mKind = FactorKind::LoopClosure;
            closure.mI = bestNode;
            closure.mJ = id;
            closure.mMeasurement =
                Between(graph.Node(bestNode).mEstimate, pose);
            closure.mInfo = prediction.mClosureInfo;
            extension.mFactors.push_back(closure);
        }
        previous = pose;
    }
    return extension;
}

std::vector<Vec2> PlanPath(const Vec2& start, const Vec2& goal,
                           const OccupancyGrid& grid,
                           const PlannerConfig& config,
                           const std::uint64_t seed)
{
    ValidatePlannerConfig(config);
    if (!start.allFinite() || !goal.allFinite())
        throw InvalidInput("PlanPath: non-finite endpoint");

    if (!grid.IsPathFree({ goal }, config.mInflation, 0.0))
        throw GoalInCollision("PlanPath: goal cell is blocked");

    if ((goal - start).norm() <= config.mReachTolXy)
        return { start };

    if (!grid.IsPathFree({ start }, config.mInflation, 0.0))
        throw PathNotFound("PlanPath: start cell is blocked");

    /* Unknown space only counts as traversable within the sensor
     * horizon of the path start, not of each segment */
    auto segmentFree = [&](const Vec2& a, const Vec2& b) {
        const double slack =
            std::max(config.mUnknownOkRadius - (a - start).norm(), 0.0);
        return grid.IsPathFree({ a, b }, config.mInflation, slack);
    };

    struct TreeNode
    {
        Vec2 mPosition;
        int mParent;
    };
    std::vector<TreeNode> tree { { start, -1 } };
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    int reached = -1;
    for (int iter = 0; iter < config.mMaxIterations && reached < 0;
         ++iter) {
        Vec2 target;
        if (unit(rng) < config.mGoalBias) {
            target = goal;
        } else {
            const double along = unit(rng);
            const double angle = 2.0 * kPi * unit(rng);
            const double radius =
                config.mSampleRadius * std::sqrt(unit(rng));
            target = start + along * (goal - start) +
                     radius * Vec2(std::cos(angle), std::sin(angle));
        }

        std::size_t nearest = 0;
        double nearestDist = (tree[0].mPosition - target).squaredNorm();
        for (std::size_t i = 1; i < tree.size(); ++i) {
            const double dist = (tree[i].mPosition - target).squaredNorm();
            if (dist < nearestDist) {
                nearestDist = dist;
                nearest = i;
            }
        }

        const Vec2 from = tree[nearest].mPosition;
        const Vec2 offset = target - from;
        const double length = offset.norm();
        if (length < 1.0e-9)
            continue;
        const Vec2 next =
            from + (std::min(length, config.mRrtStep) / length) * offset;
        if (!segmentFree(from, next))
            continue;

        tree.push_back({ next, static_cast<int>(nearest) });
        if ((next - goal).norm() <= config.mReachTolXy)
            reached = static_cast<int>(tree.size()) - 1;
    }
    if (reached < 0)
        throw PathNotFound("PlanPath: iteration budget exhausted");

    std::vector<Vec2> path;
    for (int index = reached; index >= 0;
         index = tree[static_cast<std::size_t>(index)].mParent)
        path.push_back(tree[static_cast<std::size_t>(index)].mPosition);
    std::reverse(path.begin(), path.end());

    if ((path.back() - goal).norm() > 1.0e-12 &&
        segmentFree(path.back(), goal))
        path.push_back(goal);

    /* Shortcutting: splice out random sub-chains that a straight
     * segment can replace */
    for (int i = 0; i < config.mShortcutIterations; ++i) {
        if (path.size() < 3)
            break;
        std::uniform_int_distribution<std::size_t> pick(0, path.size() - 1);
        std::size_t a = pick(rng);
        std::size_t b = pick(rng);
        if (a > b)
            std::swap(a, b);
        if (b - a < 2)
            continue;
        if (!segmentFree(path[a], path[b]))
            continue;
        path.erase(path.begin() + static_cast<std::ptrdiff_t>(a) + 1,
                   path.begin() + static_cast<std::ptrdiff_t>(b));
    }
    return path;
}

} /* namespace vrvm */
