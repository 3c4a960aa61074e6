/* mission_test.cpp */

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vrvm/errors.hpp"
#include "vrvm/mission.hpp"
#include "vrvm/scenario.hpp"
#include "vrvm/virtual_map.hpp"

using namespace vrvm;

namespace {

namespace fs = std::filesystem;

std::string ScenarioPath(const std::string& name)
{
    return std::string(VRVM_SCENARIO_DIR) + "/" + name;
}

ScenarioConfig ParseText(const std::string& text)
{
    std::istringstream input(text);
    return ParseScenario(input, "mem");
}

Mat3 StrongInfo()
{
    Mat3 info = Mat3::Zero();
    info(0, 0) = 1.0e8;
    info(1, 1) = 1.0e8;
    info(2, 2) = 1.0e8;
    return info;
}

/* 4x4 block at the origin inside a 20x20 world; the block's outer
 * ring is 12 cells once the four buried centre cells drop out */
World SquareBlockWorld()
{
    World world;
    world.mXMin = -10.0;
    world.mYMin = -10.0;
    world.mXMax = 10.0;
    world.mYMax = 10.0;
    world.mStart = Pose2(-8.0, -8.0, 0.0);
    world.mObstacles.emplace_back(std::vector<Vec2>{
        Vec2(-2.0, -2.0), Vec2(2.0, -2.0), Vec2(2.0, 2.0), Vec2(-2.0, 2.0)});
    return world;
}

std::string ReadFile(const fs::path& path)
{
    std::ifstream input(path, std::ios::binary);
    std::ostringstream content;
    content << input.rdbuf();
    return content.str();
}

fs::path FreshDir(const std::string& name)
{
    const fs::path dir = fs::path(testing::TempDir()) / name;
    fs::remove_all(dir);
    return dir;
}

/* The full box run is expensive, so every test that inspects it
 * shares one execution */
const RunMetrics& BoxRun()
{
    static const RunMetrics metrics = [] {
        return RunMission(LoadScenario(ScenarioPath("box.scn")));
    }();
    return metrics;
}

} /* namespace */

TEST(ScenarioParse, MinimalFileKeepsDefaults)
{
    const ScenarioConfig config = ParseText(
        "format: 1\n"
        "[mission]\n"
        "world: w.world\n");
    EXPECT_EQ(config.mWorldPath, "w.world");
    EXPECT_EQ(config.mPlanner, PlannerKind::Vrvm);
    EXPECT_EQ(config.mSeed, 1u);
    EXPECT_EQ(config.mMaxSteps, 2000);
    EXPECT_EQ(config.mMaxDecisions, 0);
    EXPECT_FALSE(config.mDumpMaps);
    EXPECT_DOUBLE_EQ(config.mRules.mResolution, 1.0);
    EXPECT_DOUBLE_EQ(config.mRules.mFailureError, 10.0);
    EXPECT_EQ(config.mVmMaxDepth, 7);
    EXPECT_EQ(config.mSensor.mBeamCount, 72);
    EXPECT_DOUBLE_EQ(config.mPlannerConfig.mLambdaMap, 5.0);
}

TEST(ScenarioParse, EverySectionReached)
{
    const ScenarioConfig config = ParseText(
        "format: 1\n"
        "# comment survives anywhere\n"
        "[mission]\n"
        "world: deep.world\n"
        "planner: fsmi\n"
        "seed: 42\n"
        "max_steps: 123\n"
        "max_decisions: 7\n"
        "dump_maps: true\n"
        "resolution: 0.5\n"
        "hit_log_odds: 1.5\n"
        "miss_log_odds: -0.25\n"
        "failure_error: 8.0\n"
        "structure_min_hits: 3\n"
        "[closure]\n"
        "search_radius: 12.0\n"
        "min_node_gap: 15\n"
        "[sensor]\n"
        "max_range: 25.0\n"
        "beam_count: 90\n"
        "range_std: 0.1\n"
        "bearing_std: 0.001\n"
        "fov: 6.28\n"
        "[motion]\n"
        "x_std: 0.02\n"
        "y_std: 0.03\n"
        "psi_std: 0.004\n"
        "max_surge: 1.5\n"
        "max_yaw_rate: 0.4\n"
        "[vm]\n"
        "sigma0: 0.6\n"
        "tau_det0: 0.05\n"
        "tau_p: 0.2\n"
        "theta_occ: 0.6\n"
        "sigma_fix: 0.04\n"
        "gamma: 0.9\n"
        "max_depth: 9\n"
        "[planner]\n"
        "rrt_step: 3.0\n"
        "sample_radius: 50.0\n"
        "max_iterations: 500\n"
        "max_paths: 20\n"
        "shortcut_iterations: 100\n"
        "reach_tol_xy: 3.0\n"
        "goal_bias: 0.2\n"
        "inflation: 1.2\n"
        "unknown_ok_radius: 25.0\n"
        "keyframe_spacing: 2.5\n"
        "alpha: 0.4\n"
        "beta: 0.6\n"
        "gamma: 0.8\n"
        "gd: 0.05\n"
        "lambda_map: 2.0\n"
        "[frontier]\n"
        "min_cluster: 5\n"
        "max_frontiers: 40\n"
        "exploit_radius: 9.0\n"
        "exploit_age: 20\n"
        "exploit_spacing: 4.0\n"
        "exploit_standoff: 1.5\n");
    EXPECT_EQ(config.mPlanner, PlannerKind::Fsmi);
    EXPECT_EQ(config.mSeed, 42u);
    EXPECT_EQ(config.mMaxSteps, 123);
    EXPECT_EQ(config.mMaxDecisions, 7);
    EXPECT_TRUE(config.mDumpMaps);
    EXPECT_DOUBLE_EQ(config.mRules.mResolution, 0.5);
    EXPECT_DOUBLE_EQ(config.mRules.mHitLogOdds, 1.5);
    EXPECT_DOUBLE_EQ(config.mRules.mMissLogOdds, -0.25);
    EXPECT_EQ(config.mRules.mStructureMinHits, 3);
    EXPECT_DOUBLE_EQ(config.mClosure.mSearchRadius, 12.0);
    EXPECT_EQ(config.mClosure.mMinNodeGap, 15);
    EXPECT_DOUBLE_EQ(config.mSensor.mMaxRange, 25.0);
    EXPECT_EQ(config.mSensor.mBeamCount, 90);
    EXPECT_DOUBLE_EQ(config.mNoise.mYStd, 0.03);
    EXPECT_DOUBLE_EQ(config.mLimits.mMaxSurge, 1.5);
    EXPECT_DOUBLE_EQ(config.mVm.mSigma0, 0.6);
    EXPECT_DOUBLE_EQ(config.mVm.mGamma, 0.9);
    EXPECT_EQ(config.mVmMaxDepth, 9);
    EXPECT_DOUBLE_EQ(config.mPlannerConfig.mRrtStep, 3.0);
    EXPECT_DOUBLE_EQ(config.mPlannerConfig.mGamma, 0.8);
    EXPECT_DOUBLE_EQ(config.mPlannerConfig.mLambdaMap, 2.0);
    EXPECT_EQ(config.mFrontier.mMinClusterSize, 5);
    EXPECT_DOUBLE_EQ(config.mFrontier.mExploitStandoff, 1.5);
}

TEST(ScenarioParse, RejectsMalformedInput)
{
    EXPECT_THROW(ParseText(""), InvalidInput);
    EXPECT_THROW(ParseText("bounds: 0 0 1 1\n"), InvalidInput);
    EXPECT_THROW(ParseText("format: 2\n"), InvalidInput);
    /* key before any section */
    EXPECT_THROW(ParseText("format: 1\nworld: w.world\n"), InvalidInput);
    EXPECT_THROW(ParseText("format: 1\n[warp]\n"), InvalidInput);
    EXPECT_THROW(ParseText("format: 1\n[mission\n"), InvalidInput);
    EXPECT_THROW(
        ParseText("format: 1\n[mission]\nworld: w\nwarp_speed: 9\n"),
        InvalidInput);
    EXPECT_THROW(
        ParseText("format: 1\n[sensor]\nbeam_count: x\n"), InvalidInput);
    EXPECT_THROW(
        ParseText("format: 1\n[mission]\nworld: w\nplanner: astar\n"),
        InvalidInput);
    EXPECT_THROW(
        ParseText("format: 1\n[mission]\nworld: w\nseed: -3\n"),
        InvalidInput);
    /* parses but fails validation */
    EXPECT_THROW(
        ParseText("format: 1\n[mission]\nworld: w\nmax_steps: 0\n"),
        InvalidInput);
    EXPECT_THROW(
        ParseText("format: 1\n[mission]\nworld: w\nhit_log_odds: -1\n"),
        InvalidInput);
    EXPECT_THROW(
        ParseText("format: 1\n[mission]\nworld: w\nresolution: 0\n"),
        InvalidInput);
}

TEST(ScenarioParse, PlannerNamesRoundTrip)
{
    for (const PlannerKind kind :
         {PlannerKind::Vrvm, PlannerKind::Uvm, PlannerKind::Nf,
          PlannerKind::Nbv, PlannerKind::Fsmi}) {
        EXPECT_EQ(ParsePlannerName(PlannerName(kind)), kind);
    }
    EXPECT_THROW(ParsePlannerName("dijkstra"), InvalidInput);
}

TEST(ScenarioParse, LoadResolvesWorldNextToScenario)
{
    const ScenarioConfig config = LoadScenario(ScenarioPath("box.scn"));
    EXPECT_TRUE(fs::exists(config.mWorldPath));
    EXPECT_EQ(fs::path(config.mWorldPath).filename(), "box.world");
    EXPECT_THROW(LoadScenario(ScenarioPath("missing.scn")), InvalidInput);
}

TEST(CoverageScore, NoObstaclesScoresZero)
{
    World world;
    world.mXMin = -8.0;
    world.mYMin = -8.0;
    world.mXMax = 8.0;
    world.mYMax = 8.0;
    const OccupancyGrid grid =
        OccupancyGrid::FromBounds(-8.0, -8.0, 8.0, 8.0, 1.0);
    EXPECT_DOUBLE_EQ(Coverage(grid, world), 0.0);
}

TEST(CoverageScore, UnseenGridScoresZero)
{
    const World world = SquareBlockWorld();
    const OccupancyGrid grid =
        OccupancyGrid::FromBounds(-10.0, -10.0, 10.0, 10.0, 1.0);
    EXPECT_DOUBLE_EQ(Coverage(grid, world), 0.0);
}

TEST(CoverageScore, CountsOnlyTheReachableRing)
{
    const World world = SquareBlockWorld();
    OccupancyGrid grid =
        OccupancyGrid::FromBounds(-10.0, -10.0, 10.0, 10.0, 1.0);

    /* every cell of the block including the buried middle */
    for (int ix = grid.CellX(-1.5); ix <= grid.CellX(1.5); ++ix) {
        for (int iy = grid.CellY(-1.5); iy <= grid.CellY(1.5); ++iy) {
            grid.SetLogOdds(ix, iy, 4.0);
        }
    }
    EXPECT_DOUBLE_EQ(Coverage(grid, world), 1.0);

    /* latches are permanent: clearing the log odds changes nothing */
    for (int ix = grid.CellX(-1.5); ix <= grid.CellX(1.5); ++ix) {
        for (int iy = grid.CellY(-1.5); iy <= grid.CellY(1.5); ++iy) {
            grid.SetLogOdds(ix, iy, -4.0);
        }
    }
    EXPECT_DOUBLE_EQ(Coverage(grid, world), 1.0);
}

TEST(CoverageScore, HalfTheRingScoresHalf)
{
    const World world = SquareBlockWorld();
    OccupancyGrid grid =
        OccupancyGrid::FromBounds(-10.0, -10.0, 10.0, 10.0, 1.0);

    /* the south row and the two flanking cells of the next row: six
     * of the twelve ring cells */
    for (const double x : {-1.5, -0.5, 0.5, 1.5}) {
        grid.SetLogOdds(grid.CellX(x), grid.CellY(-1.5), 4.0);
    }
    grid.SetLogOdds(grid.CellX(-1.5), grid.CellY(-0.5), 4.0);
    grid.SetLogOdds(grid.CellX(1.5), grid.CellY(-0.5), 4.0);
    EXPECT_DOUBLE_EQ(Coverage(grid, world), 0.5);
}

TEST(MapAccuracy, PerfectEstimatesScoreZero)
{
    PoseGraph graph(Pose2(1.0, 2.0, 0.3), StrongInfo());
    graph.AddKeyframe(Pose2(1.0, 0.0, 0.0), StrongInfo());
    graph.Solve();
    const std::vector<Pose2> truth{Pose2(1.0, 2.0, 0.3),
                                   Compose(Pose2(1.0, 2.0, 0.3),
                                           Pose2(1.0, 0.0, 0.0))};
    EXPECT_NEAR(MapRmse(graph, truth), 0.0, 1.0e-9);
}

TEST(MapAccuracy, GlobalOffsetCancels)
{
    /* same relative motion, completely different anchor */
    PoseGraph graph(Pose2(5.0, -3.0, 0.4), StrongInfo());
    graph.AddKeyframe(Pose2(1.0, 0.0, 0.1), StrongInfo());
    graph.AddKeyframe(Pose2(1.0, 0.5, -0.2), StrongInfo());
    graph.Solve();

    std::vector<Pose2> truth{Pose2(0.0, 0.0, 0.0)};
    truth.push_back(Compose(truth.back(), Pose2(1.0, 0.0, 0.1)));
    truth.push_back(Compose(truth.back(), Pose2(1.0, 0.5, -0.2)));
    EXPECT_NEAR(MapRmse(graph, truth), 0.0, 1.0e-9);
}

TEST(MapAccuracy, HandComputedResidual)
{
    PoseGraph graph(Pose2(0.0, 0.0, 0.0), StrongInfo());
    graph.AddKeyframe(Pose2(1.1, 0.0, 0.0), StrongInfo());
    graph.Solve();
    const std::vector<Pose2> truth{Pose2(0.0, 0.0, 0.0),
                                   Pose2(1.0, 0.0, 0.0)};
    /* one exact node and one off by 0.1 */
    EXPECT_NEAR(MapRmse(graph, truth), std::sqrt(0.01 / 2.0), 1.0e-9);
}

TEST(MapAccuracy, EmptyInputsScoreZero)
{
    PoseGraph graph(Pose2(0.0, 0.0, 0.0), StrongInfo());
    graph.Solve();
    EXPECT_DOUBLE_EQ(MapRmse(graph, {}), 0.0);
}

TEST(MissionRun, EmptyWorldStopsWithNothingToPlan)
{
    const RunMetrics metrics =
        RunMission(LoadScenario(ScenarioPath("empty.scn")));
    EXPECT_EQ(metrics.mTermination, Termination::NoFeasiblePlan);
    EXPECT_LE(metrics.mSteps.size(), 5u);
    EXPECT_EQ(metrics.mDecisionCount, 0);
    EXPECT_DOUBLE_EQ(metrics.FinalCoverage(), 0.0);
}

TEST(MissionRun, BoxRoomGetsFullyMapped)
{
    const RunMetrics& metrics = BoxRun();
    EXPECT_EQ(metrics.mTermination, Termination::Complete);
    EXPECT_GE(metrics.FinalCoverage(), 0.9);
    EXPECT_LT(metrics.FinalRmse(), 0.5);
    EXPECT_GT(metrics.mDecisionCount, 0);
}

TEST(MissionRun, StepRowsAreDenseAndOrdered)
{
    const RunMetrics& metrics = BoxRun();
    ASSERT_FALSE(metrics.mSteps.empty());
    double lastCoverage = 0.0;
    for (std::size_t i = 0; i < metrics.mSteps.size(); ++i) {
        const StepRecord& row = metrics.mSteps[i];
        EXPECT_EQ(row.mStep, static_cast<int>(i));
        EXPECT_DOUBLE_EQ(row.mT, 0.2 * static_cast<double>(i));
        EXPECT_GE(row.mCoverage, lastCoverage);
        EXPECT_GE(row.mPlanMs, 0.0);
        EXPECT_GT(row.mLeaves, 0u);
        EXPECT_GT(row.mBytes, 0u);
        lastCoverage = row.mCoverage;
    }
}

TEST(MissionRun, DecisionLogMarksExactlyOneWinnerPerCycle)
{
    const RunMetrics& metrics = BoxRun();
    ASSERT_FALSE(metrics.mDecisions.empty());
    std::vector<int> winners(static_cast<std::size_t>(
                                 metrics.mDecisionCount) + 1, 0);
    for (const DecisionRecord& record : metrics.mDecisions) {
        ASSERT_GE(record.mCycle, 1);
        ASSERT_LE(record.mCycle, metrics.mDecisionCount);
        if (record.mChosen) {
            winners[static_cast<std::size_t>(record.mCycle)] += 1;
        }
    }
    for (int cycle = 1; cycle <= metrics.mDecisionCount; ++cycle) {
        EXPECT_LE(winners[static_cast<std::size_t>(cycle)], 1)
            << "cycle " << cycle;
    }
}

TEST(MissionRun, FinalMapReloadsAsTheSameTree)
{
    const RunMetrics& metrics = BoxRun();
    const ScenarioConfig config = LoadScenario(ScenarioPath("box.scn"));
    std::istringstream dump(metrics.mMapDump);
    const QuadtreeMap reloaded = QuadtreeMap::LoadText(
        dump, config.mVm, config.mVmMaxDepth, config.mRules.mResolution);
    std::ostringstream again;
    reloaded.DumpText(again);
    EXPECT_EQ(again.str(), metrics.mMapDump);
}

TEST(MissionRun, BaselineCarriesNoVirtualMap)
{
    ScenarioConfig config = LoadScenario(ScenarioPath("box.scn"));
    config.mPlanner = PlannerKind::Nf;
    config.mMaxSteps = 120;
    const RunMetrics metrics = RunMission(config);
    ASSERT_FALSE(metrics.mSteps.empty());
    for (const StepRecord& row : metrics.mSteps) {
        EXPECT_EQ(row.mLeaves, 0u);
        EXPECT_EQ(row.mBytes, 0u);
    }
    EXPECT_EQ(metrics.mMapDump, "# no virtual map\n");
}

TEST(MissionRun, RerunsAreIdentical)
{
    ScenarioConfig config = LoadScenario(ScenarioPath("box.scn"));
    config.mMaxSteps = 250;
    const RunMetrics first = RunMission(config);
    const RunMetrics second = RunMission(config);

    const fs::path dirA = FreshDir("vrvm_rerun_a");
    const fs::path dirB = FreshDir("vrvm_rerun_b");
    EmitRun(first, dirA.string());
    EmitRun(second, dirB.string());
    EXPECT_EQ(ReadFile(dirA / "metrics.csv"), ReadFile(dirB / "metrics.csv"));
    EXPECT_EQ(ReadFile(dirA / "decisions.log"),
              ReadFile(dirB / "decisions.log"));
    EXPECT_EQ(ReadFile(dirA / "map_final.txt"),
              ReadFile(dirB / "map_final.txt"));
    EXPECT_EQ(ReadFile(dirA / "summary.txt"), ReadFile(dirB / "summary.txt"));
}

TEST(MissionRun, SnapshotPerDecisionWhenAsked)
{
    ScenarioConfig config = LoadScenario(ScenarioPath("box.scn"));
    config.mMaxSteps = 250;
    config.mDumpMaps = true;
    const RunMetrics metrics = RunMission(config);
    ASSERT_GE(metrics.mCycleDumps.size(), 1u);
    EXPECT_LE(static_cast<int>(metrics.mCycleDumps.size()),
              metrics.mDecisionCount);

    std::istringstream dump(metrics.mCycleDumps.front().second);
    EXPECT_NO_THROW(QuadtreeMap::LoadText(dump, config.mVm,
                                          config.mVmMaxDepth,
                                          config.mRules.mResolution));
}

TEST(EmitFiles, WritesTheWholeSet)
{
    ScenarioConfig config = LoadScenario(ScenarioPath("empty.scn"));
    const RunMetrics metrics = RunMission(config);
    const fs::path dir = FreshDir("vrvm_emit_set");
    EmitRun(metrics, dir.string());

    for (const char* name : {"metrics.csv", "decisions.log", "summary.txt",
                             "map_final.txt", "grid_final.txt"}) {
        EXPECT_TRUE(fs::exists(dir / name)) << name;
    }

    const std::string metricsText = ReadFile(dir / "metrics.csv");
    EXPECT_EQ(metricsText.rfind("step,t,x_true,y_true,psi_true,x_est,y_est,"
                                "psi_est,pos_err_m,coverage,rmse_m,leaves,"
                                "bytes,plan_ms\n",
                                0),
              0u);
    const std::string summary = ReadFile(dir / "summary.txt");
    EXPECT_EQ(summary.rfind("termination: no_feasible_plan\n", 0), 0u);
}

TEST(EmitFiles, UnwritableTargetThrows)
{
    const fs::path blocker = fs::path(testing::TempDir()) / "vrvm_blocker";
    std::ofstream(blocker) << "plain file\n";
    const RunMetrics metrics;
    EXPECT_THROW(EmitRun(metrics, (blocker / "sub").string()), InvalidInput);
}
