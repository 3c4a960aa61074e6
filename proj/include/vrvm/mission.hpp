/* mission.hpp */

#ifndef VRVM_MISSION_HPP
#define VRVM_MISSION_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "vrvm/geometry.hpp"
#include "vrvm/occupancy_grid.hpp"
#include "vrvm/pose_graph.hpp"
#include "vrvm/scenario.hpp"
#include "vrvm/world.hpp"

namespace vrvm {

/* Control period; every metric row advances time by this much */
inline constexpr double kStepSeconds = 0.2;

enum class Termination
{
    Complete,
    NoFeasiblePlan,
    LocalisationFailure,
    StepBudget,
};

const char* TerminationName(Termination termination);

struct StepRecord
{
    int mStep = 0;
    double mT = 0.0;
    Pose2 mTrue;
    Pose2 mEst;
    double mPosError = 0.0;
    double mCoverage = 0.0;
    double mRmse = 0.0;
    std::size_t mLeaves = 0;
    std::size_t mBytes = 0;
    double mPlanMs = 0.0;
};

struct DecisionRecord
{
    int mCycle = 0;
    int mStep = 0;
    int mFrontierId = -1;
    Frontier::Kind mKind = Frontier::Kind::Exploring;
    double mLength = 0.0;
    double mUMap = 0.0;
    double mUTraj = 0.0;
    double mULength = 0.0;
    double mTotal = 0.0;
    bool mChosen = false;
};

struct RunMetrics
{
    std::vector<StepRecord> mSteps;
    std::vector<DecisionRecord> mDecisions;
    int mDecisionCount = 0;
    Termination mTermination = Termination::StepBudget;
    std::string mMapDump;
    std::string mGridDump;
    std::vector<std::pair<int, std::string>> mCycleDumps;

    double FinalCoverage() const
    {
        return this->mSteps.empty() ? 0.0 : this->mSteps.back().mCoverage;
    }
    double FinalRmse() const
    {
        return this->mSteps.empty() ? 0.0 : this->mSteps.back().mRmse;
    }
};

/* Fraction of the ground-truth structure cells the grid has ever seen
 * occupied. A structure cell has its centre inside an obstacle within
 * one grid resolution of the obstacle boundary, so buried interior
 * cells no sensor can reach do not count against the score. Zero when
 * the world has no obstacles */
double Coverage(const OccupancyGrid& grid, const World& world);

/* Root-mean-square error of the estimated keyframe positions against
 * the true ones after rigidly pinning the first pose onto its truth */
double MapRmse(const PoseGraph& graph, const std::vector<Pose2>& truth);

/* Closed-loop exploration run: sense, integrate, keyframe and close
 * loops, refresh the virtual map, replan on arrival, execute. Fully
 * deterministic for a fixed scenario */
RunMetrics RunMission(const ScenarioConfig& config);

/* Writes metrics.csv, decisions.log, summary.txt, map_final.txt and
 * grid_final.txt under outDir, creating it if needed, plus one
 * map_cycle_NNNN.txt per stored snapshot */
void EmitRun(const RunMetrics& metrics, const std::string& outDir);

} /* namespace vrvm */

#endif /* VRVM_MISSION_HPP */
