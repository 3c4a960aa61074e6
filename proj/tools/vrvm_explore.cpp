/* vrvm_explore.cpp */

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "vrvm/mission.hpp"
#include "vrvm/scenario.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Active exploration benchmark runner"};

    std::string scenarioPath;
    std::string plannerName;
    long long seed = -1;
    int maxSteps = 0;
    double lambdaMap = -1.0;
    std::string outDir = "out";
    bool dumpMaps = false;

    app.add_option("--scenario", scenarioPath, "Scenario file")->required();
    app.add_option("--planner", plannerName,
                   "Planner override: vrvm, uvm, nf, nbv, fsmi");
    app.add_option("--seed", seed, "Seed override");
    app.add_option("--max-steps", maxSteps, "Step budget override");
    app.add_option("--lambda-map", lambdaMap, "Map weight override");
    app.add_option("--out", outDir, "Output directory");
    app.add_flag("--dump-maps", dumpMaps, "Write a map snapshot per decision");

    CLI11_PARSE(app, argc, argv);

    try {
        vrvm::ScenarioConfig config = vrvm::LoadScenario(scenarioPath);
        if (!plannerName.empty()) {
            config.mPlanner = vrvm::ParsePlannerName(plannerName);
        }
        if (seed >= 0) {
            config.mSeed = static_cast<std::uint64_t>(seed);
        }
        if (maxSteps > 0) {
            config.mMaxSteps = maxSteps;
        }
        if (lambdaMap >= 0.0) {
            config.mPlannerConfig.mLambdaMap = lambdaMap;
        }
        if (dumpMaps) {
            config.mDumpMaps = true;
        }

        const vrvm::RunMetrics metrics = vrvm::RunMission(config);
        vrvm::EmitRun(metrics, outDir);

        std::printf("%s: %s after %zu steps, %d decisions, "
                    "coverage %.3f, rmse %.3f m\n",
                    vrvm::PlannerName(config.mPlanner),
                    vrvm::TerminationName(metrics.mTermination),
                    metrics.mSteps.size(), metrics.mDecisionCount,
                    metrics.FinalCoverage(), metrics.FinalRmse());
    } catch (const std::exception& fail) {
        std::fprintf(stderr, "vrvm_explore: %s\n", fail.what());
        return 1;
    }
    return 0;
}
