/* planner.hpp */

#ifndef VRVM_PLANNER_HPP
#define VRVM_PLANNER_HPP

#include <algorithm>
#include <cstdint>
#include <vector>

#include "vrvm/errors.hpp"
#include "vrvm/gaussian.hpp"
#include "vrvm/geometry.hpp"
#include "vrvm/occupancy_grid.hpp"
#include "vrvm/pose_graph.hpp"
#include "vrvm/rng.hpp"
#include "vrvm/simulator.hpp"
#include "vrvm/virtual_map.hpp"

namespace vrvm {

struct PlannerConfig
{
    double mRrtStep = 4.0;
    double mSampleRadius = 80.0;
    int mMaxIterations = 1000;
    int mMaxPaths = 100;
    int mShortcutIterations = 200;
    double mReachTolXy = 4.0;
    double mGoalBias = 0.1;
    double mInflation = 1.5;
    double mUnknownOkRadius = 30.0;
    double mKeyframeSpacing = 2.0;

    double mAlpha = 0.3;      /* path length penalty */
    double mBeta = 0.5;       /* weight on the final pose term */
    double mGamma = 1.0;      /* end-map discount inside the gain */
    double mGd = 0.1;         /* reserved: per-step discount decrement */
    double mLambdaMap = 5.0;
};

void ValidatePlannerConfig(const PlannerConfig& config);

/* Noise model for hypothetical graph extensions. Odometry information
 * is per keyframe hop; a predicted closure is attached when a
 * hypothetical pose passes within mClosureRadius of a keyframe that
 * observed structure */
struct PredictionModel
{
    Mat3 mOdometryInfo = (Mat3() << 25.0, 0.0, 0.0,
                                    0.0, 25.0, 0.0,
                                    0.0, 0.0, 100.0).finished();
    Mat3 mClosureInfo = (Mat3() << 100.0, 0.0, 0.0,
                                   0.0, 100.0, 0.0,
                                   0.0, 0.0, 400.0).finished();
    double mClosureRadius = 15.0;
};

struct CandidatePlan
{
    Frontier mGoal;
    std::vector<Vec2> mPath;
    double mLength = 0.0;
    Gaussian3 mPredictedFinal;
    double mUMap = 0.0;
    double mUTraj = 0.0;
    double mULength = 0.0;
    double mTotal = 0.0;
    bool mFeasible = false;
    int mTouchedLeaves = 0;
};

struct SelectionResult
{
    CandidatePlan mBest;
    std::vector<CandidatePlan> mCandidates;   /* in evaluation order */
};

/* Goal-biased RRT over the inflated grid followed by shortcutting.
 * Deterministic per seed. Throws GoalInCollision when the goal cell
 * is blocked and PathNotFound when the iteration budget runs out */
std::vector<Vec2> PlanPath(const Vec2& start, const Vec2& goal,
                           const OccupancyGrid& grid,
                           const PlannerConfig& config,
                           std::uint64_t seed);

double PathLength(const std::vector<Vec2>& path);

/* Points along the polyline every `spacing` metres of arc length,
 * first and last waypoint always included */
std::vector<Vec2> ResampleByArcLength(const std::vector<Vec2>& path,
                                      double spacing);

struct HypotheticalExtension
{
    std::vector<Pose2> mPoses;
    std::vector<Factor> mFactors;
};

/* Hypothetical keyframes past the last real node, chained by odometry
 * factors, plus predicted closures against structure keyframes */
HypotheticalExtension BuildExtension(const PoseGraph& graph,
                                     const std::vector<Vec2>& samples,
                                     const std::vector<int>& structureNodes,
                                     const PredictionModel& prediction);

/* Argmax order: total, then trajectory term, then shorter path, then
 * lower frontier id */
inline bool BetterCandidate(const CandidatePlan& a, const CandidatePlan& b)
{
    if (a.mTotal != b.mTotal)
        return a.mTotal > b.mTotal;
    if (a.mUTraj != b.mUTraj)
        return a.mUTraj > b.mUTraj;
    if (a.mLength != b.mLength)
        return a.mLength < b.mLength;
    return a.mGoal.mId < b.mGoal.mId;
}

/* Scores one collision-free path against snapshots of the graph, the
 * virtual map, and the grid. The snapshots are never modified; all
 * hypothetical work runs on scratch copies and overlays. A candidate
 * whose belief propagation fails comes back marked infeasible */
template <typename MapT>
CandidatePlan EvaluateCandidate(const Frontier& goal,
                                const std::vector<Vec2>& path,
                                const PoseGraph& graph, const MapT& map,
                                const OccupancyGrid& grid,
                                const SensorModel& sensor,
                                const std::vector<int>& structureNodes,
                                const PredictionModel& prediction,
                                const PlannerConfig& config)
{
    CandidatePlan plan;
    plan.mGoal = goal;
    plan.mPath = path;
    plan.mLength = PathLength(path);
    plan.mULength = -config.mAlpha * plan.mLength;

    try {
        const std::vector<Vec2> samples =
            ResampleByArcLength(path, config.mKeyframeSpacing);
        const HypotheticalExtension extension =
            BuildExtension(graph, samples, structureNodes, prediction);
        const ExtendedMarginals marginals =
            graph.MarginalsAfterClosure(extension.mPoses,
                                        extension.mFactors);
        plan.mPredictedFinal = marginals.mFinal;

        const int lastId = graph.NodeCount() - 1;
        InfoOverlay<MapT> overlay(map);
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const Mat2 positionCov = (k == 0)
                ? graph.MarginalCovariance(lastId).PositionCov()
                : marginals.mPositionCovs[k - 1];
            const UpdateReport report = overlay.UpdateVisible(
                samples[k], positionCov, sensor, grid);
            plan.mTouchedLeaves += report.Total();
        }

        const GainResult gain = SplitInvariantGain(
            overlay, samples, sensor.mMaxRange, config.mGamma);
        plan.mUMap = overlay.MapUncertainty() + gain.mGain;
        plan.mUTraj =
            -config.mBeta * LogDet2(plan.mPredictedFinal.PositionCov());
        plan.mTotal = config.mLambdaMap * plan.mUMap + plan.mUTraj +
                      plan.mULength;
        plan.mFeasible = true;
    } catch (const Error&) {
        plan.mFeasible = false;
    }
    return plan;
}

/* Plans for the largest frontiers first (up to mMaxPaths), evaluates
 * every candidate, and returns the utility argmax together with the
 * full per-candidate record for logging. Throws NoFeasiblePlan when
 * nothing survives */
template <typename MapT>
SelectionResult SelectGoal(const std::vector<Frontier>& frontiers,
                           const PoseGraph& graph, const MapT& map,
                           const OccupancyGrid& grid,
                           const SensorModel& sensor,
                           const std::vector<int>& structureNodes,
                           const PredictionModel& prediction,
                           const PlannerConfig& config,
                           const std::uint64_t seed)
{
    ValidatePlannerConfig(config);
    if (frontiers.empty())
        throw NoFeasiblePlan("SelectGoal: no candidate frontiers");

    std::vector<Frontier> ranked = frontiers;
    std::sort(ranked.begin(), ranked.end(),
              [](const Frontier& a, const Frontier& b) {
                  if (a.mClusterSize != b.mClusterSize)
                      return a.mClusterSize > b.mClusterSize;
                  return a.mId < b.mId;
              });
    if (ranked.size() > static_cast<std::size_t>(config.mMaxPaths))
        ranked.resize(static_cast<std::size_t>(config.mMaxPaths));

    const Pose2 start = graph.Node(graph.NodeCount() - 1).mEstimate;
    SelectionResult result;
    for (const Frontier& frontier : ranked) {
        CandidatePlan plan;
        plan.mGoal = frontier;
        try {
            const std::vector<Vec2> path = PlanPath(
                start.Position(), frontier.mPosition, grid, config,
                DeriveSeed(seed, static_cast<std::uint64_t>(frontier.mId)));
            plan = EvaluateCandidate(frontier, path, graph, map, grid,
                                     sensor, structureNodes, prediction,
                                     config);
        } catch (const Error&) {
            plan.mFeasible = false;
        }
        result.mCandidates.push_back(std::move(plan));
    }

    const CandidatePlan* best = nullptr;
    for (const CandidatePlan& plan : result.mCandidates) {
        if (!plan.mFeasible)
            continue;
        if (best == nullptr || BetterCandidate(plan, *best))
            best = &plan;
    }
    if (best == nullptr)
        throw NoFeasiblePlan("SelectGoal: every candidate failed");

    result.mBest = *best;
    return result;
}

} /* namespace vrvm */

#endif /* VRVM_PLANNER_HPP */
