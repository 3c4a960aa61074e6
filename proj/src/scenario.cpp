/* scenario.cpp */

#include "vrvm/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "vrvm/errors.hpp"

namespace vrvm {

namespace {

[[noreturn]] void ParseFail(const std::string& label, const int lineNo,
                            const std::string& reason)
{
    throw InvalidInput(label + ":" + std::to_string(lineNo) + ": " + reason);
}

bool KnownSection(const std::string& section)
{
    return section == "mission" || section == "closure" || section == "sensor"
        || section == "motion" || section == "vm" || section == "planner"
        || section == "frontier";
}

} /* namespace */

PlannerKind ParsePlannerName(const std::string& name)
{
    if (name == "vrvm") {
        return PlannerKind::Vrvm;
    }
    if (name == "uvm") {
        return PlannerKind::Uvm;
    }
    if (name == "nf") {
        return PlannerKind::Nf;
    }
    if (name == "nbv") {
        return PlannerKind::Nbv;
    }
    if (name == "fsmi") {
        return PlannerKind::Fsmi;
    }
    throw InvalidInput("unknown planner `" + name
                       + "` (expected vrvm, uvm, nf, nbv, or fsmi)");
}

const char* PlannerName(const PlannerKind kind)
{
    switch (kind) {
    case PlannerKind::Vrvm:
        return "vrvm";
    case PlannerKind::Uvm:
        return "uvm";
    case PlannerKind::Nf:
        return "nf";
    case PlannerKind::Nbv:
        return "nbv";
    case PlannerKind::Fsmi:
        return "fsmi";
    }
    throw InvalidInput("unknown planner kind");
}

void ValidateScenario(const ScenarioConfig& config)
{
    if (config.mWorldPath.empty()) {
        throw InvalidInput("scenario: no world file given");
    }
    if (config.mMaxSteps < 1) {
        throw InvalidInput("scenario: max_steps must be at least 1");
    }
    if (config.mMaxDecisions < 0) {
        throw InvalidInput("scenario: max_decisions must be non-negative");
    }
    if (!(config.mRules.mResolution > 0.0)) {
        throw InvalidInput("scenario: resolution must be positive");
    }
    if (!(config.mRules.mHitLogOdds > 0.0)) {
        throw InvalidInput("scenario: hit_log_odds must be positive");
    }
    if (!(config.mRules.mMissLogOdds < 0.0)) {
        throw InvalidInput("scenario: miss_log_odds must be negative");
    }
    if (!(config.mRules.mFailureError > 0.0)) {
        throw InvalidInput("scenario: failure_error must be positive");
    }
    if (config.mRules.mStructureMinHits < 0) {
        throw InvalidInput("scenario: structure_min_hits must be non-negative");
    }
    if (config.mVmMaxDepth < 0) {
        throw InvalidInput("scenario: vm max_depth must be non-negative");
    }
    if (config.mSensor.mBeamCount < 1 || !(config.mSensor.mMaxRange > 0.0)
        || !(config.mSensor.mFov > 0.0) || config.mSensor.mRangeStd < 0.0
        || config.mSensor.mBearingStd < 0.0) {
        throw InvalidInput("scenario: bad sensor model");
    }
    if (config.mNoise.mXStd < 0.0 || config.mNoise.mYStd < 0.0
        || config.mNoise.mPsiStd < 0.0) {
        throw InvalidInput("scenario: motion noise stds must be non-negative");
    }
    if (!(config.mLimits.mMaxSurge > 0.0) || !(config.mLimits.mMaxYawRate > 0.0)) {
        throw InvalidInput("scenario: motion limits must be positive");
    }
    if (config.mFrontier.mMinClusterSize < 1 || config.mFrontier.mMaxFrontiers < 1
        || !(config.mFrontier.mExploitRadius > 0.0) || config.mFrontier.mExploitAge < 0
        || !(config.mFrontier.mExploitSpacing > 0.0)
        || config.mFrontier.mExploitStandoff < 0.0) {
        throw InvalidInput("scenario: bad frontier extraction settings");
    }
    if (!(config.mClosure.mSearchRadius > 0.0) || config.mClosure.mMinNodeGap < 1
        || !(config.mClosure.mMaxResidual > 0.0) || config.mClosure.mMinPoints < 3
        || config.mClosure.mMaxIterations < 1 || !(config.mClosure.mMatchGate > 0.0)
        || config.mClosure.mMinNormalSpread < 0.0) {
        throw InvalidInput("scenario: bad loop closure settings");
    }
    ValidatePlannerConfig(config.mPlannerConfig);
}

ScenarioConfig ParseScenario(std::istream& input, const std::string& label)
{
    ScenarioConfig config;
    bool haveFormat = false;
    std::string section;

    std::string line;
    int lineNo = 0;
    while (std::getline(input, line)) {
        ++lineNo;
        const std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        std::istringstream tokens(line);
        std::string key;
        tokens >> key;

        if (!haveFormat) {
            int version = 0;
            if (key != "format:" || !(tokens >> version)) {
                ParseFail(label, lineNo, "expected `format: 1` header");
            }
            if (version != 1) {
                ParseFail(label, lineNo, "unsupported format version");
            }
            haveFormat = true;
            continue;
        }

        if (key.size() >= 2 && key.front() == '[') {
            if (key.back() != ']') {
                ParseFail(label, lineNo, "malformed section header");
            }
            section = key.substr(1, key.size() - 2);
            if (!KnownSection(section)) {
                ParseFail(label, lineNo, "unknown section `" + section + "`");
            }
            continue;
        }

        if (key.empty() || key.back() != ':') {
            ParseFail(label, lineNo, "expected `key: value`");
        }
        if (section.empty()) {
            ParseFail(label, lineNo, "key before any section header");
        }
        const std::string name = key.substr(0, key.size() - 1);

        const auto readString = [&]() {
            std::string value;
            if (!(tokens >> value)) {
                ParseFail(label, lineNo, "`" + name + "` needs a value");
            }
            return value;
        };
        const auto readDouble = [&]() {
            double value = 0.0;
            if (!(tokens >> value)) {
                ParseFail(label, lineNo, "`" + name + "` needs a number");
            }
            return value;
        };
        const auto readInt = [&]() {
            long long value = 0;
            if (!(tokens >> value)
                || value > std::numeric_limits<int>::max()
                || value < std::numeric_limits<int>::min()) {
                ParseFail(label, lineNo, "`" + name + "` needs an integer");
            }
            return static_cast<int>(value);
        };
        const auto readSeed = [&]() {
            long long value = 0;
            if (!(tokens >> value) || value < 0) {
                ParseFail(label, lineNo, "`" + name + "` needs a non-negative integer");
            }
            return static_cast<std::uint64_t>(value);
        };
        const auto readBool = [&]() {
            const std::string value = readString();
            if (value == "true" || value == "1") {
                return true;
            }
            if (value == "false" || value == "0") {
                return false;
            }
            ParseFail(label, lineNo, "`" + name + "` needs true or false");
        };

        if (section == "mission") {
            if (name == "world") {
                config.mWorldPath = readString();
            } else if (name == "planner") {
                try {
                    config.mPlanner = ParsePlannerName(readString());
                } catch (const InvalidInput& fail) {
                    ParseFail(label, lineNo, fail.what());
                }
            } else if (name == "seed") {
                config.mSeed = readSeed();
            } else if (name == "max_steps") {
                config.mMaxSteps = readInt();
            } else if (name == "max_decisions") {
                config.mMaxDecisions = readInt();
            } else if (name == "dump_maps") {
                config.mDumpMaps = readBool();
            } else if (name == "resolution") {
                config.mRules.mResolution = readDouble();
            } else if (name == "hit_log_odds") {
                config.mRules.mHitLogOdds = readDouble();
            } else if (name == "miss_log_odds") {
                config.mRules.mMissLogOdds = readDouble();
            } else if (name == "failure_error") {
                config.mRules.mFailureError = readDouble();
            } else if (name == "structure_min_hits") {
                config.mRules.mStructureMinHits = readInt();
            } else {
                ParseFail(label, lineNo, "unknown mission key `" + name + "`");
            }
        } else if (section == "closure") {
            if (name == "search_radius") {
                config.mClosure.mSearchRadius = readDouble();
            } else if (name == "min_node_gap") {
                config.mClosure.mMinNodeGap = readInt();
            } else if (name == "max_residual") {
                config.mClosure.mMaxResidual = readDouble();
            } else if (name == "min_points") {
                config.mClosure.mMinPoints = readInt();
            } else if (name == "max_iterations") {
                config.mClosure.mMaxIterations = readInt();
            } else if (name == "match_gate") {
                config.mClosure.mMatchGate = readDouble();
            } else if (name == "min_normal_spread") {
                config.mClosure.mMinNormalSpread = readDouble();
            } else {
                ParseFail(label, lineNo, "unknown closure key `" + name + "`");
            }
        } else if (section == "sensor") {
            if (name == "max_range") {
                config.mSensor.mMaxRange = readDouble();
            } else if (name == "fov") {
                config.mSensor.mFov = readDouble();
            } else if (name == "beam_count") {
                config.mSensor.mBeamCount = readInt();
            } else if (name == "range_std") {
                config.mSensor.mRangeStd = readDouble();
            } else if (name == "bearing_std") {
                config.mSensor.mBearingStd = readDouble();
            } else {
                ParseFail(label, lineNo, "unknown sensor key `" + name + "`");
            }
        } else if (section == "motion") {
            if (name == "x_std") {
                config.mNoise.mXStd = readDouble();
            } else if (name == "y_std") {
                config.mNoise.mYStd = readDouble();
            } else if (name == "psi_std") {
                config.mNoise.mPsiStd = readDouble();
            } else if (name == "max_surge") {
                config.mLimits.mMaxSurge = readDouble();
            } else if (name == "max_yaw_rate") {
                config.mLimits.mMaxYawRate = readDouble();
            } else {
                ParseFail(label, lineNo, "unknown motion key `" + name + "`");
            }
        } else if (section == "vm") {
            if (name == "sigma0") {
                config.mVm.mSigma0 = readDouble();
            } else if (name == "tau_det0") {
                config.mVm.mTauDet0 = readDouble();
            } else if (name == "tau_p") {
                config.mVm.mTauP = readDouble();
            } else if (name == "theta_occ") {
                config.mVm.mThetaOcc = readDouble();
            } else if (name == "sigma_fix") {
                config.mVm.mSigmaFix = readDouble();
            } else if (name == "gamma") {
                config.mVm.mGamma = readDouble();
            } else if (name == "max_depth") {
                config.mVmMaxDepth = readInt();
            } else {
                ParseFail(label, lineNo, "unknown vm key `" + name + "`");
            }
        } else if (section == "planner") {
            if (name == "rrt_step") {
                config.mPlannerConfig.mRrtStep = readDouble();
            } else if (name == "sample_radius") {
                config.mPlannerConfig.mSampleRadius = readDouble();
            } else if (name == "max_iterations") {
                config.mPlannerConfig.mMaxIterations = readInt();
            } else if (name == "max_paths") {
                config.mPlannerConfig.mMaxPaths = readInt();
            } else if (name == "shortcut_iterations") {
                config.mPlannerConfig.mShortcutIterations = readInt();
            } else if (name == "reach_tol_xy") {
                config.mPlannerConfig.mReachTolXy = readDouble();
            } else if (name == "goal_bias") {
                config.mPlannerConfig.mGoalBias = readDouble();
            } else if (name == "inflation") {
                config.mPlannerConfig.mInflation = readDouble();
            } else if (name == "unknown_ok_radius") {
                config.mPlannerConfig.mUnknownOkRadius = readDouble();
            } else if (name == "keyframe_spacing") {
                config.mPlannerConfig.mKeyframeSpacing = readDouble();
            } else if (name == "alpha") {
                config.mPlannerConfig.mAlpha = readDouble();
            } else if (name == "beta") {
                config.mPlannerConfig.mBeta = readDouble();
            } else if (name == "gamma") {
                config.mPlannerConfig.mGamma = readDouble();
            } else if (name == "gd") {
                config.mPlannerConfig.mGd = readDouble();
            } else if (name == "lambda_map") {
                config.mPlannerConfig.mLambdaMap = readDouble();
            } else {
                ParseFail(label, lineNo, "unknown planner key `" + name + "`");
            }
        } else if (section == "frontier") {
            if (name == "min_cluster") {
                config.mFrontier.mMinClusterSize = readInt();
            } else if (name == "max_frontiers") {
                config.mFrontier.mMaxFrontiers = readInt();
            } else if (name == "exploit_radius") {
                config.mFrontier.mExploitRadius = readDouble();
            } else if (name == "exploit_age") {
                config.mFrontier.mExploitAge = readInt();
            } else if (name == "exploit_spacing") {
                config.mFrontier.mExploitSpacing = readDouble();
            } else if (name == "exploit_standoff") {
                config.mFrontier.mExploitStandoff = readDouble();
            } else {
                ParseFail(label, lineNo, "unknown frontier key `" + name + "`");
            }
        }
    }

    if (!haveFormat) {
        throw InvalidInput(label + ": empty scenario (missing `format: 1`)");
    }
    ValidateScenario(config);
    return config;
}

ScenarioConfig LoadScenario(const std::string& path)
{
    std::ifstream input(path);
    if (!input) {
        throw InvalidInput("scenario: cannot open " + path);
    }
    ScenarioConfig config = ParseScenario(input, path);

    namespace fs = std::filesystem;
    fs::path world(config.mWorldPath);
    if (world.is_relative()) {
        world = fs::path(path).parent_path() / world;
    }
    if (!fs::exists(world)) {
        throw InvalidInput("scenario: world file not found: " + world.string());
    }
    config.mWorldPath = world.string();
    return config;
}

} /* namespace vrvm */
