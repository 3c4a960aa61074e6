/* scenario.hpp */

#ifndef VRVM_SCENARIO_HPP
#define VRVM_SCENARIO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>

#include "vrvm/loop_closure.hpp"
#include "vrvm/occupancy_grid.hpp"
#include "vrvm/planner.hpp"
#include "vrvm/simulator.hpp"
#include "vrvm/virtual_map.hpp"

namespace vrvm {

enum class PlannerKind
{
    Vrvm,
    Uvm,
    Nf,
    Nbv,
    Fsmi,
};

/* InvalidInput on anything but vrvm, uvm, nf, nbv, fsmi */
PlannerKind ParsePlannerName(const std::string& name);
const char* PlannerName(PlannerKind kind);

/* Mission-level knobs that no module config owns */
struct MissionRules
{
    double mResolution = 1.0;
    double mHitLogOdds = 2.0;
    double mMissLogOdds = -0.5;
    double mFailureError = 10.0;
    int mStructureMinHits = 5;
};

struct ScenarioConfig
{
    std::string mWorldPath;
    PlannerKind mPlanner = PlannerKind::Vrvm;
    std::uint64_t mSeed = 1;
    int mMaxSteps = 2000;
    int mMaxDecisions = 0;
    bool mDumpMaps = false;
    int mVmMaxDepth = 7;
    MissionRules mRules;
    SensorModel mSensor;
    MotionNoise mNoise;
    MotionLimits mLimits;
    VmConfig mVm;
    PlannerConfig mPlannerConfig;
    FrontierParams mFrontier;
    LoopClosureParams mClosure;
};

void ValidateScenario(const ScenarioConfig& config);

/* Structured text reader; first line must be `format: 1`, then
 * `[section]` headers with `key: value` lines. Unknown sections and
 * keys are errors */
ScenarioConfig ParseScenario(std::istream& input, const std::string& label);

/* Reads the file, resolves a relative world path against the
 * scenario's own directory, and requires the world file to exist */
ScenarioConfig LoadScenario(const std::string& path);

} /* namespace vrvm */

#endif /* VRVM_SCENARIO_HPP */
