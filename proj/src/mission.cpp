/* mission.cpp */

#include "vrvm/mission.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>

#include "vrvm/baselines.hpp"
#include "vrvm/errors.hpp"
#include "vrvm/loop_closure.hpp"
#include "vrvm/planner.hpp"
#include "vrvm/rng.hpp"
#include "vrvm/simulator.hpp"
#include "vrvm/virtual_map.hpp"

namespace vrvm {

namespace {

/* Waypoints closer than this to the estimate are considered passed */
constexpr double kWaypointTol = 1.5;

/* The robot only drives forward once it roughly faces the waypoint */
constexpr double kHeadingGate = 0.6;

constexpr double kCollisionMargin = 0.2;

/* A plan this old is abandoned and the goal re-selected */
constexpr int kMaxPlanAge = 300;

constexpr int kMaxStallSteps = 25;
constexpr int kMaxRecoveryRounds = 3;
constexpr double kRetreatTol = 0.3;

constexpr std::uint64_t kScanTag = 0x5CA9ull << 32;
constexpr std::uint64_t kPlanTag = 0x97A4ull << 32;
constexpr std::uint64_t kOdomTag = 0x0D03ull;

std::vector<std::pair<int, int>> StructureCells(const OccupancyGrid& grid,
                                                const World& world)
{
    std::vector<std::pair<int, int>> cells;
    for (int iy = 0; iy < grid.Height(); ++iy) {
        for (int ix = 0; ix < grid.Width(); ++ix) {
            const Vec2 centre = grid.CellCentre(ix, iy);
            for (const Polygon& obstacle : world.mObstacles) {
                if (obstacle.Contains(centre) &&
                    obstacle.BoundaryDistance(centre) <= grid.Resolution()) {
                    cells.emplace_back(ix, iy);
                    break;
                }
            }
        }
    }
    return cells;
}

double CoverageOf(const std::vector<std::pair<int, int>>& cells,
                  const OccupancyGrid& grid)
{
    if (cells.empty()) {
        return 0.0;
    }
    std::size_t latched = 0;
    for (const auto& [ix, iy] : cells) {
        latched += grid.EverOccupied(ix, iy) ? 1 : 0;
    }
    return static_cast<double>(latched) / static_cast<double>(cells.size());
}

/* Information of the accumulated odometry between keyframes; the
 * per-step variances add up over the hop */
Mat3 OdometryInfo(const MotionNoise& noise, const int steps)
{
    const double count = static_cast<double>(std::max(1, steps));
    const auto axis = [&](const double sigma) {
        return 1.0 / std::max(count * sigma * sigma, 1.0e-6);
    };
    Mat3 info = Mat3::Zero();
    info(0, 0) = axis(noise.mXStd);
    info(1, 1) = axis(noise.mYStd);
    info(2, 2) = axis(noise.mPsiStd);
    return info;
}

/* Hypothetical odometry information matched to the real noise model
 * at one keyframe spacing of travel */
PredictionModel MakePrediction(const ScenarioConfig& config)
{
    PredictionModel prediction;
    const double stepLength =
        std::max(config.mLimits.mMaxSurge * kStepSeconds, 1.0e-9);
    const double hops =
        std::max(1.0, config.mPlannerConfig.mKeyframeSpacing / stepLength);
    const auto axis = [&](const double sigma) {
        return 1.0 / std::max(hops * sigma * sigma, 1.0e-6);
    };
    Mat3 info = Mat3::Zero();
    info(0, 0) = axis(config.mNoise.mXStd);
    info(1, 1) = axis(config.mNoise.mYStd);
    info(2, 2) = axis(config.mNoise.mPsiStd);
    prediction.mOdometryInfo = info;
    return prediction;
}

struct PlanOutcome
{
    bool mOk = false;
    std::vector<Vec2> mPath;
    Vec2 mGoal = Vec2::Zero();
    double mPlanMs = 0.0;
    std::vector<DecisionRecord> mRecords;
};

bool ClearOfWalls(const OccupancyGrid& grid, const Vec2& point,
                  const double inflation)
{
    const int reach =
        static_cast<int>(std::ceil(inflation / grid.Resolution())) + 1;
    const int cx = grid.CellX(point.x());
    const int cy = grid.CellY(point.y());
    for (int dy = -reach; dy <= reach; ++dy) {
        for (int dx = -reach; dx <= reach; ++dx) {
            const int ix = cx + dx;
            const int iy = cy + dy;
            if (!grid.Inside(ix, iy) || !grid.IsOccupied(ix, iy)) {
                continue;
            }
            if ((grid.CellCentre(ix, iy) - point).norm() <= inflation) {
                return false;
            }
        }
    }
    return true;
}

/* Frontier representatives tend to hug the wall that exposed them,
 * inside the inflation margin where no path may end. Planners aim at
 * the nearest free cell with clearance instead */
std::optional<Vec2> SnapGoal(const OccupancyGrid& grid, const Vec2& position,
                             const double clearance, const double searchRadius)
{
    const int radius =
        static_cast<int>(std::ceil(searchRadius / grid.Resolution()));
    const int cx = grid.CellX(position.x());
    const int cy = grid.CellY(position.y());
    std::optional<Vec2> best;
    double bestDist = std::numeric_limits<double>::infinity();
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            const int ix = cx + dx;
            const int iy = cy + dy;
            if (!grid.Inside(ix, iy) || !grid.IsFree(ix, iy)) {
                continue;
            }
            const Vec2 centre = grid.CellCentre(ix, iy);
            if (!ClearOfWalls(grid, centre, clearance)) {
                continue;
            }
            const double dist = (centre - position).norm();
            if (dist < bestDist) {
                bestDist = dist;
                best = centre;
            }
        }
    }
    return best;
}

template <typename MapT>
PlanOutcome PlanWithVirtualMap(const std::vector<Frontier>& frontiers,
                               const PoseGraph& graph, const MapT& map,
                               const OccupancyGrid& grid,
                               const ScenarioConfig& config,
                               const std::vector<int>& structureNodes,
                               const PredictionModel& prediction,
                               const std::uint64_t seed, const int cycle,
                               const int step)
{
    PlanOutcome outcome;
    SelectionResult result;
    try {
        result = SelectGoal(frontiers, graph, map, grid, config.mSensor,
                            structureNodes, prediction,
                            config.mPlannerConfig, seed);
    } catch (const NoFeasiblePlan&) {
        return outcome;
    }

    int touched = 0;
    for (const CandidatePlan& plan : result.mCandidates) {
        touched += plan.mTouchedLeaves;
        DecisionRecord record;
        record.mCycle = cycle;
        record.mStep = step;
        record.mFrontierId = plan.mGoal.mId;
        record.mKind = plan.mGoal.mKind;
        record.mLength = plan.mLength;
        record.mUMap = plan.mUMap;
        record.mUTraj = plan.mUTraj;
        record.mULength = plan.mULength;
        record.mTotal = plan.mFeasible
            ? plan.mTotal
            : -std::numeric_limits<double>::infinity();
        record.mChosen =
            plan.mFeasible && plan.mGoal.mId == result.mBest.mGoal.mId;
        outcome.mRecords.push_back(record);
    }
    outcome.mPlanMs = 1.0e-3 * static_cast<double>(touched);
    outcome.mPath = result.mBest.mPath;
    outcome.mGoal = result.mBest.mGoal.mPosition;
    outcome.mOk = true;
    return outcome;
}

PlanOutcome PlanWithBaseline(const PlannerKind kind,
                             const std::vector<Frontier>& frontiers,
                             const OccupancyGrid& grid, const Pose2& robot,
                             const ScenarioConfig& config,
                             const std::vector<Vec2>& recentGoals,
                             const std::uint64_t seed, const int cycle,
                             const int step)
{
    PlanOutcome outcome;
    const PlannerConfig& planner = config.mPlannerConfig;
    const DistanceField field(grid, robot.Position(), planner.mInflation);
    const NbvConfig nbv;
    const FsmiConfig fsmi;
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(frontiers.size());
    for (std::size_t i = 0; i < frontiers.size(); ++i) {
        order[i] = i;
        const Frontier& frontier = frontiers[i];
        const double cost = field.Cost(frontier.mPosition);

        DecisionRecord record;
        record.mCycle = cycle;
        record.mStep = step;
        record.mFrontierId = frontier.mId;
        record.mKind = frontier.mKind;
        record.mLength = cost;
        record.mTotal = -inf;
        if (std::isfinite(cost)) {
            if (kind == PlannerKind::Nf) {
                record.mTotal = NfUtility(field, frontier);
                record.mULength = record.mTotal;
            } else if (kind == PlannerKind::Nbv) {
                record.mTotal =
                    NbvUtility(frontier.mPosition, grid, robot, cost,
                               recentGoals, config.mSensor.mMaxRange, nbv);
                record.mUTraj =
                    -nbv.mBeta * HeadingChange(robot, frontier.mPosition);
                record.mULength = -nbv.mAlpha * cost;
                record.mUMap =
                    record.mTotal - record.mUTraj - record.mULength;
            } else {
                record.mTotal =
                    FsmiUtility(frontier.mPosition, grid, robot, cost,
                                config.mSensor.mMaxRange, fsmi);
                record.mUMap = FsmiMutualInformation(
                    frontier.mPosition, grid, config.mSensor.mMaxRange, fsmi);
                record.mUTraj =
                    -fsmi.mBeta * HeadingChange(robot, frontier.mPosition);
                record.mULength = -fsmi.mLambdaLength * cost;
            }
        }
        outcome.mRecords.push_back(record);
    }

    std::sort(order.begin(), order.end(),
              [&](const std::size_t a, const std::size_t b) {
                  if (outcome.mRecords[a].mTotal != outcome.mRecords[b].mTotal)
                      return outcome.mRecords[a].mTotal >
                             outcome.mRecords[b].mTotal;
                  return frontiers[a].mId < frontiers[b].mId;
              });

    for (const std::size_t index : order) {
        if (!std::isfinite(outcome.mRecords[index].mTotal)) {
            break;
        }
        const Frontier& frontier = frontiers[index];
        try {
            outcome.mPath = PlanPath(
                robot.Position(), frontier.mPosition, grid, planner,
                DeriveSeed(seed, static_cast<std::uint64_t>(frontier.mId)));
        } catch (const Error&) {
            continue;
        }
        outcome.mGoal = frontier.mPosition;
        outcome.mRecords[index].mChosen = true;
        outcome.mOk = true;
        break;
    }

    /* Deterministic stand-in for planning compute: the count of cell
     * visits the scorer makes, scaled to a millisecond-like unit */
    const double raysToCells =
        config.mSensor.mMaxRange / std::max(grid.Resolution(), 1.0e-9);
    const double count = static_cast<double>(frontiers.size());
    if (kind == PlannerKind::Nf) {
        outcome.mPlanMs = 1.0e-3 * static_cast<double>(grid.CellCount());
    } else if (kind == PlannerKind::Nbv) {
        outcome.mPlanMs =
            1.0e-3 * count * (360.0 / nbv.mViewStepDeg) * raysToCells;
    } else {
        outcome.mPlanMs =
            1.0e-3 * count * (360.0 / fsmi.mRayStepDeg) * raysToCells;
    }
    return outcome;
}

} /* namespace */

const char* TerminationName(const Termination termination)
{
    switch (termination) {
    case Termination::Complete:
        return "complete";
    case Termination::NoFeasiblePlan:
        return "no_feasible_plan";
    case Termination::LocalisationFailure:
        return "localisation_failure";
    case Termination::StepBudget:
        return "step_budget";
    }
    return "step_budget";
}

double Coverage(const OccupancyGrid& grid, const World& world)
{
    return CoverageOf(StructureCells(grid, world), grid);
}

double MapRmse(const PoseGraph& graph, const std::vector<Pose2>& truth)
{
    if (truth.empty() || graph.NodeCount() == 0) {
        return 0.0;
    }
    const Pose2 align = Compose(truth.front(), Inverse(graph.Node(0).mEstimate));
    const std::size_t count =
        std::min(truth.size(), static_cast<std::size_t>(graph.NodeCount()));
    double sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const Vec2 mapped =
            Compose(align, graph.Node(static_cast<int>(i)).mEstimate)
                .Position();
        sum += (mapped - truth[i].Position()).squaredNorm();
    }
    return std::sqrt(sum / static_cast<double>(count));
}

RunMetrics RunMission(const ScenarioConfig& config)
{
    ValidateScenario(config);
    const World world = LoadWorld(config.mWorldPath);

    OccupancyGrid grid = OccupancyGrid::FromBounds(
        world.mXMin, world.mYMin, world.mXMax, world.mYMax,
        config.mRules.mResolution, config.mVm.mThetaOcc);

    const Vec2 lower(world.mXMin, world.mYMin);
    const Vec2 upper(world.mXMax, world.mYMax);
    std::unique_ptr<QuadtreeMap> quadtree;
    std::unique_ptr<UniformVirtualMap> uniform;
    if (config.mPlanner == PlannerKind::Vrvm) {
        quadtree = std::make_unique<QuadtreeMap>(
            lower, upper, config.mVm, config.mVmMaxDepth,
            config.mRules.mResolution);
    } else if (config.mPlanner == PlannerKind::Uvm) {
        uniform = std::make_unique<UniformVirtualMap>(
            lower, upper, config.mRules.mResolution, config.mVm);
    }

    Mat3 priorInfo = Mat3::Zero();
    priorInfo(0, 0) = 1.0e4;
    priorInfo(1, 1) = 1.0e4;
    priorInfo(2, 2) = 1.0e4;
    PoseGraph graph(world.mStart, priorInfo, 0);
    graph.Solve();

    std::vector<Pose2> truthKeyframes{world.mStart};
    std::vector<KeyframeScan> history;
    std::vector<int> structureNodes;

    Pose2 truePose = world.mStart;
    Pose2 estPose = world.mStart;
    Pose2 accumOdom;
    int stepsSinceKeyframe = 0;

    std::vector<Vec2> waypoints;
    std::size_t nextWaypoint = 0;
    bool haveGoal = false;
    Vec2 goalPos = Vec2::Zero();
    int planStep = 0;
    int stallSteps = 0;
    std::optional<Vec2> retreat;
    int recoveryRounds = 0;
    std::vector<Vec2> recentGoals;

    std::mt19937_64 odomRng(DeriveSeed(config.mSeed, kOdomTag));
    std::normal_distribution<double> gauss(0.0, 1.0);

    const auto structureCells = StructureCells(grid, world);
    const PredictionModel prediction = MakePrediction(config);

    RunMetrics metrics;

    for (int step = 0; step < config.mMaxSteps; ++step) {
        std::optional<Termination> pending;
        double planMs = 0.0;

        const Scan scan =
            CastScan(world, truePose, config.mSensor,
                     DeriveSeed(config.mSeed,
                                kScanTag + static_cast<std::uint64_t>(step)));
        int hits = 0;
        for (const Beam& beam : scan.mBeams) {
            hits += beam.mHit ? 1 : 0;
        }
        grid.IntegrateScan(estPose, scan, config.mRules.mHitLogOdds,
                           config.mRules.mMissLogOdds, step);
        if (step == 0) {
            if (hits >= config.mRules.mStructureMinHits) {
                structureNodes.push_back(0);
            }
            history.push_back(KeyframeScan{0, ScanPointsLocal(scan)});
        }

        const bool reached =
            haveGoal && (estPose.Position() - goalPos).norm() <=
                            config.mPlannerConfig.mReachTolXy;
        const bool exhausted = haveGoal && nextWaypoint >= waypoints.size();
        const bool stale = haveGoal && step - planStep > kMaxPlanAge;
        const bool planningEvent =
            !retreat && (!haveGoal || reached || exhausted || stale);

        const double travelled = std::hypot(accumOdom.mX, accumOdom.mY);
        if (stepsSinceKeyframe > 0 &&
            (travelled >= config.mPlannerConfig.mKeyframeSpacing ||
             planningEvent)) {
            try {
                const int id = graph.AddKeyframe(
                    accumOdom, OdometryInfo(config.mNoise, stepsSinceKeyframe),
                    step);
                truthKeyframes.push_back(truePose);
                graph.Solve();
                if (hits >= config.mRules.mStructureMinHits) {
                    structureNodes.push_back(id);
                }
                std::optional<Factor> closure;
                try {
                    closure =
                        TryLoopClosure(graph, scan, history, config.mClosure);
                } catch (const Error&) {
                    closure.reset();
                }
                if (std::getenv("VRVM_DBG")) {
                    int near = 0;
                    for (const KeyframeScan& h : history) {
                        if (h.mNodeId > id - config.mClosure.mMinNodeGap)
                            continue;
                        const double d =
                            (graph.Node(h.mNodeId).mEstimate.Position() -
                             graph.Node(id).mEstimate.Position())
                                .norm();
                        if (d <= config.mClosure.mSearchRadius)
                            ++near;
                    }
                    std::fprintf(stderr,
                                 "kf %d step %d hits %d near %d closure %d\n",
                                 id, step, hits, near, closure ? 1 : 0);
                }
                if (closure) {
                    graph.AddFactor(*closure);
                    graph.Solve();
                }
                history.push_back(KeyframeScan{id, ScanPointsLocal(scan)});
                estPose = graph.Node(id).mEstimate;
                accumOdom = Pose2();
                stepsSinceKeyframe = 0;
            } catch (const Error&) {
                pending = Termination::LocalisationFailure;
            }
        }

        if (!pending && (quadtree || uniform)) {
            const int lastId = graph.NodeCount() - 1;
            const Mat2 positionCov =
                graph.MarginalCovariance(lastId).PositionCov();
            if (quadtree) {
                quadtree->Refine(estPose.Position(), config.mSensor.mMaxRange,
                                 grid);
                quadtree->UpdateVisible(estPose.Position(), positionCov,
                                        config.mSensor, grid);
                quadtree->LockOccupied(grid);
            } else {
                uniform->UpdateVisible(estPose.Position(), positionCov,
                                       config.mSensor, grid);
                uniform->LockOccupied(grid);
            }
        }

        if (!pending && planningEvent) {
            if (config.mMaxDecisions > 0 &&
                metrics.mDecisionCount >= config.mMaxDecisions) {
                pending = Termination::StepBudget;
            } else {
                const std::vector<Frontier> extracted =
                    grid.ExtractFrontiers(config.mFrontier, step);
                /* exploit frontiers are revisit opportunities near old
                 * structure and never run out; the map is done once no
                 * frontier borders unknown space any more */
                const bool anyExploring = std::any_of(
                    extracted.begin(), extracted.end(),
                    [](const Frontier& frontier) {
                        return frontier.mKind == Frontier::Kind::Exploring;
                    });
                /* A goal is approached only to within the reach
                 * tolerance, so the clearance must absorb that slack
                 * for the next plan to have a legal start */
                const double goalClear = config.mPlannerConfig.mInflation +
                    config.mPlannerConfig.mReachTolXy;
                std::vector<Frontier> frontiers;
                for (Frontier frontier : extracted) {
                    const std::optional<Vec2> snapped =
                        SnapGoal(grid, frontier.mPosition, goalClear,
                                 goalClear + 2.0);
                    if (!snapped) {
                        continue;
                    }
                    frontier.mPosition = *snapped;
                    if ((frontier.mPosition - estPose.Position()).norm() <=
                        config.mPlannerConfig.mReachTolXy) {
                        continue;
                    }
                    frontiers.push_back(frontier);
                }
                if (!anyExploring) {
                    pending = CoverageOf(structureCells, grid) > 0.0
                        ? Termination::Complete
                        : Termination::NoFeasiblePlan;
                } else {
                    metrics.mDecisionCount += 1;
                    const int cycle = metrics.mDecisionCount;
                    const std::uint64_t planSeed = DeriveSeed(
                        config.mSeed,
                        kPlanTag + static_cast<std::uint64_t>(cycle));
                    PlanOutcome outcome;
                    if (quadtree) {
                        outcome = PlanWithVirtualMap(
                            frontiers, graph, *quadtree, grid, config,
                            structureNodes, prediction, planSeed, cycle,
                            step);
                    } else if (uniform) {
                        outcome = PlanWithVirtualMap(
                            frontiers, graph, *uniform, grid, config,
                            structureNodes, prediction, planSeed, cycle,
                            step);
                    } else {
                        /* the geometry and information baselines rank
                         * unseen space only; revisit candidates would
                         * trap a nearest-frontier rule at the first
                         * mapped wall */
                        std::vector<Frontier> exploring;
                        for (const Frontier& frontier : frontiers) {
                            if (frontier.mKind == Frontier::Kind::Exploring) {
                                exploring.push_back(frontier);
                            }
                        }
                        outcome = PlanWithBaseline(
                            config.mPlanner, exploring, grid, estPose, config,
                            recentGoals, planSeed, cycle, step);
                    }
                    metrics.mDecisions.insert(metrics.mDecisions.end(),
                                              outcome.mRecords.begin(),
                                              outcome.mRecords.end());
                    planMs = outcome.mPlanMs;
                    if (!outcome.mOk) {
                        /* Odometry drift can leave the vehicle inside
                         * the inflation margin, where no plan may
                         * start. Back off to clear water and try
                         * again before giving up */
                        if (recoveryRounds < kMaxRecoveryRounds) {
                            ++recoveryRounds;
                            retreat = SnapGoal(
                                grid, estPose.Position(),
                                config.mPlannerConfig.mInflation + 0.5,
                                4.0);
                            if (retreat &&
                                (*retreat - estPose.Position()).norm() <
                                    0.05) {
                                retreat.reset();
                            }
                            haveGoal = false;
                        } else {
                            pending = Termination::NoFeasiblePlan;
                        }
                    } else {
                        recoveryRounds = 0;
                        waypoints = outcome.mPath;
                        nextWaypoint = 1;
                        haveGoal = true;
                        goalPos = outcome.mGoal;
                        planStep = step;
                        recentGoals.push_back(outcome.mGoal);
                        if (config.mDumpMaps && quadtree) {
                            std::ostringstream snapshot;
                            quadtree->DumpText(snapshot);
                            metrics.mCycleDumps.emplace_back(cycle,
                                                             snapshot.str());
                        }
                    }
                }
            }
        }

        /* Steers toward a point in the estimate frame and advances the
         * true pose one step. Returns true when a blocked advance has
         * persisted long enough that the target should be dropped */
        auto driveToward = [&](const Vec2& target) -> bool {
            const Vec2 toTarget = target - estPose.Position();
            const double desired = std::atan2(toTarget.y(), toTarget.x());
            const double headingErr = WrapAngle(desired - estPose.mPsi);
            MotionCommand cmd;
            cmd.mYawRate = std::clamp(headingErr / kStepSeconds,
                                      -config.mLimits.mMaxYawRate,
                                      config.mLimits.mMaxYawRate);
            cmd.mSurge = std::abs(headingErr) < kHeadingGate
                ? std::min(config.mLimits.mMaxSurge,
                           toTarget.norm() / kStepSeconds)
                : 0.0;
            Pose2 nextTrue =
                StepPose(truePose, cmd, kStepSeconds, config.mLimits);
            bool blocked = false;
            if (cmd.mSurge > 0.0 &&
                Collides(world, nextTrue.Position(), kCollisionMargin)) {
                cmd.mSurge = 0.0;
                nextTrue =
                    StepPose(truePose, cmd, kStepSeconds, config.mLimits);
                ++stallSteps;
                if (stallSteps > kMaxStallSteps) {
                    blocked = true;
                    stallSteps = 0;
                }
            } else if (cmd.mSurge > 0.0) {
                stallSteps = 0;
            }
            const Pose2 delta = Between(truePose, nextTrue);
            const Pose2 measured(
                delta.mX + config.mNoise.mXStd * gauss(odomRng),
                delta.mY + config.mNoise.mYStd * gauss(odomRng),
                delta.mPsi + config.mNoise.mPsiStd * gauss(odomRng));
            truePose = nextTrue;
            estPose = Compose(estPose, measured);
            accumOdom = Compose(accumOdom, measured);
            ++stepsSinceKeyframe;
            return blocked;
        };

        if (!pending && retreat) {
            if ((*retreat - estPose.Position()).norm() <= kRetreatTol ||
                driveToward(*retreat)) {
                retreat.reset();
            }
        } else if (!pending && haveGoal) {
            while (nextWaypoint < waypoints.size() &&
                   (waypoints[nextWaypoint] - estPose.Position()).norm() <=
                       kWaypointTol) {
                ++nextWaypoint;
            }
            if (nextWaypoint < waypoints.size() &&
                driveToward(waypoints[nextWaypoint])) {
                /* a blocked advance that persists means the plan no
                 * longer matches the world; drop it and replan */
                haveGoal = false;
            }
        }

        const double posError =
            (truePose.Position() - estPose.Position()).norm();
        if (!pending && posError > config.mRules.mFailureError) {
            pending = Termination::LocalisationFailure;
        }

        StepRecord row;
        row.mStep = step;
        row.mT = kStepSeconds * static_cast<double>(step);
        row.mTrue = truePose;
        row.mEst = estPose;
        row.mPosError = posError;
        row.mCoverage = CoverageOf(structureCells, grid);
        row.mRmse = MapRmse(graph, truthKeyframes);
        row.mLeaves = quadtree ? quadtree->LeafCount()
                               : (uniform ? uniform->CellCount() : 0);
        row.mBytes = quadtree ? quadtree->MemoryFootprint()
                              : (uniform ? uniform->MemoryFootprint() : 0);
        row.mPlanMs = planMs;
        metrics.mSteps.push_back(row);

        if (pending) {
            metrics.mTermination = *pending;
            break;
        }
    }

    std::ostringstream mapOut;
    if (quadtree) {
        quadtree->DumpText(mapOut);
    } else if (uniform) {
        mapOut << "# uniform virtual map\n# cells: " << uniform->CellCount()
               << "\n";
    } else {
        mapOut << "# no virtual map\n";
    }
    metrics.mMapDump = mapOut.str();

    std::ostringstream gridOut;
    grid.ExportText(gridOut);
    metrics.mGridDump = gridOut.str();
    return metrics;
}

void EmitRun(const RunMetrics& metrics, const std::string& outDir)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(outDir, ec);
    if (ec) {
        throw InvalidInput("cannot create output directory " + outDir);
    }

    const auto open = [&](const std::string& name) {
        const fs::path path = fs::path(outDir) / name;
        std::ofstream out(path);
        if (!out) {
            throw InvalidInput("cannot write " + path.string());
        }
        return out;
    };

    {
        std::ofstream out = open("metrics.csv");
        out << "step,t,x_true,y_true,psi_true,x_est,y_est,psi_est,"
               "pos_err_m,coverage,rmse_m,leaves,bytes,plan_ms\n";
        char line[512];
        for (const StepRecord& row : metrics.mSteps) {
            std::snprintf(line, sizeof line,
                          "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,"
                          "%.6f,%.6f,%zu,%zu,%.6f\n",
                          row.mStep, row.mT, row.mTrue.mX, row.mTrue.mY,
                          row.mTrue.mPsi, row.mEst.mX, row.mEst.mY,
                          row.mEst.mPsi, row.mPosError, row.mCoverage,
                          row.mRmse, row.mLeaves, row.mBytes, row.mPlanMs);
            out << line;
        }
    }

    {
        std::ofstream out = open("decisions.log");
        out << "cycle,step,frontier_id,kind,length,u_map,u_traj,u_length,"
               "total,chosen\n";
        char line[512];
        for (const DecisionRecord& record : metrics.mDecisions) {
            std::snprintf(
                line, sizeof line, "%d,%d,%d,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n",
                record.mCycle, record.mStep, record.mFrontierId,
                record.mKind == Frontier::Kind::Exploit ? "exploit"
                                                        : "explore",
                record.mLength, record.mUMap, record.mUTraj, record.mULength,
                record.mTotal, record.mChosen ? 1 : 0);
            out << line;
        }
    }

    {
        std::ofstream out = open("summary.txt");
        char line[128];
        out << "termination: " << TerminationName(metrics.mTermination)
            << "\n";
        out << "steps: " << metrics.mSteps.size() << "\n";
        out << "decisions: " << metrics.mDecisionCount << "\n";
        std::snprintf(line, sizeof line, "coverage: %.6f\n",
                      metrics.FinalCoverage());
        out << line;
        std::snprintf(line, sizeof line, "rmse_m: %.6f\n",
                      metrics.FinalRmse());
        out << line;
        out << "leaves: "
            << (metrics.mSteps.empty() ? 0 : metrics.mSteps.back().mLeaves)
            << "\n";
        out << "bytes: "
            << (metrics.mSteps.empty() ? 0 : metrics.mSteps.back().mBytes)
            << "\n";
    }

    open("map_final.txt") << metrics.mMapDump;
    open("grid_final.txt") << metrics.mGridDump;

    for (const auto& [cycle, dump] : metrics.mCycleDumps) {
        char name[32];
        std::snprintf(name, sizeof name, "map_cycle_%04d.txt", cycle);
        open(name) << dump;
    }
}

} /* namespace vrvm */
