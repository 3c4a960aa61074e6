/* loop_closure.hpp */

#ifndef VRVM_LOOP_CLOSURE_HPP
#define VRVM_LOOP_CLOSURE_HPP

#include <optional>
#include <vector>

#include "vrvm/geometry.hpp"
#include "vrvm/pose_graph.hpp"
#include "vrvm/simulator.hpp"

namespace vrvm {

struct LoopClosureParams
{
    double mSearchRadius = 10.0;     /* candidate keyframes within this range */
    int mMinNodeGap = 10;            /* skip recent nodes */
    double mMaxResidual = 0.25;      /* accept threshold on the match RMS, metres */
    int mMinPoints = 20;             /* matched pairs required */
    int mMaxIterations = 25;
    double mMatchGate = 2.0;         /* pair rejection distance, metres */
    double mMinNormalSpread = 0.1;   /* reject slide-prone wall-only geometry */
};

/* Hit endpoints of one keyframe's scan, kept in the body frame */
struct KeyframeScan
{
    int mNodeId = -1;
    std::vector<Vec2> mPoints;
};

struct ScanAlignment
{
    Pose2 mRelative;     /* query frame expressed in the reference frame */
    double mRms = 0.0;
    int mMatchCount = 0;
};

/* Point-to-point alignment of two scans by iterated nearest-neighbour
 * matching and a closed-form rigid fit. Fails (nullopt) when too few pairs
 * survive the gate, the residual stays above the threshold, or the matched
 * surface normals leave a translation direction unconstrained. */
std::optional<ScanAlignment> AlignScans(const std::vector<Vec2>& reference,
                                        const std::vector<Vec2>& query,
                                        const Pose2& initialGuess,
                                        const LoopClosureParams& params);

/* Searches past keyframes near the newest node's estimate and returns a
 * loop-closure factor for the best-aligning one, if any converges. The
 * factor information is derived from the alignment residual. */
std::optional<Factor> TryLoopClosure(const PoseGraph& graph,
                                     const Scan& currentScan,
                                     const std::vector<KeyframeScan>& history,
                                     const LoopClosureParams& params);

} /* namespace vrvm */

#endif /* VRVM_LOOP_CLOSURE_HPP */
