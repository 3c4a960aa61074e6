/* loop_closure.cpp */

#include "vrvm/loop_closure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace vrvm {

namespace {

Vec2 TransformPoint(const Pose2& pose, const Vec2& point)
{
    const double c = std::cos(pose.mPsi);
    const double s = std::sin(pose.mPsi);
    return Vec2(pose.mX + c * point.x() - s * point.y(),
                pose.mY + s * point.x() + c * point.y());
}

constexpr double kSegmentSpan = 4.0;   /* neighbour gap treated as one surface */

struct MatchSet
{
    std::vector<int> mQuery;
    std::vector<int> mReference;   /* nearest reference index, for the normal gate */
    std::vector<Vec2> mTargets;    /* projection onto the local reference segment */
    double mRms = 0.0;
};

/* Nearest-neighbour matching with point-to-line targets: the moved query
 * point is projected onto the segment between the nearest reference point
 * and its better neighbour. Matching plain points instead would lock the
 * along-wall component to the beam sampling lattice. */
MatchSet MatchPoints(const std::vector<Vec2>& reference,
                     const std::vector<Vec2>& query, const Pose2& relative,
                     const double gate)
{
    MatchSet matches;
    double sumSq = 0.0;
    for (size_t qi = 0; qi < query.size(); ++qi) {
        const Vec2 moved = TransformPoint(relative, query[qi]);
        double best = std::numeric_limits<double>::max();
        int bestRef = -1;
        for (size_t ri = 0; ri < reference.size(); ++ri) {
            const double d2 = (reference[ri] - moved).squaredNorm();
            if (d2 < best) {
                best = d2;
                bestRef = static_cast<int>(ri);
            }
        }
        if (bestRef < 0 || best > gate * gate)
            continue;

        Vec2 target = reference[static_cast<size_t>(bestRef)];
        double targetSq = best;
        for (const int ni : {bestRef - 1, bestRef + 1}) {
            if (ni < 0 || ni >= static_cast<int>(reference.size()))
                continue;
            const Vec2& anchor = reference[static_cast<size_t>(bestRef)];
            const Vec2 span = reference[static_cast<size_t>(ni)] - anchor;
            const double lengthSq = span.squaredNorm();
            if (lengthSq < 1.0e-18 || lengthSq > kSegmentSpan * kSegmentSpan)
                continue;
            const double t = std::clamp((moved - anchor).dot(span) / lengthSq,
                                        0.0, 1.0);
            const Vec2 projected = anchor + t * span;
            const double dSq = (moved - projected).squaredNorm();
            if (dSq < targetSq) {
                targetSq = dSq;
                target = projected;
            }
        }

        matches.mQuery.push_back(static_cast<int>(qi));
        matches.mReference.push_back(bestRef);
        matches.mTargets.push_back(target);
        sumSq += targetSq;
    }
    if (!matches.mQuery.empty())
        matches.mRms = std::sqrt(sumSq / static_cast<double>(matches.mQuery.size()));
    return matches;
}

/* Closed-form rigid transform minimising the summed squared distance of the
 * matched pairs */
Pose2 FitRigid(const std::vector<Vec2>& query, const MatchSet& matches)
{
    const double count = static_cast<double>(matches.mQuery.size());
    Vec2 meanQ = Vec2::Zero();
    Vec2 meanT = Vec2::Zero();
    for (size_t k = 0; k < matches.mQuery.size(); ++k) {
        meanQ += query[static_cast<size_t>(matches.mQuery[k])];
        meanT += matches.mTargets[k];
    }
    meanQ /= count;
    meanT /= count;

    Mat2 cross = Mat2::Zero();
    for (size_t k = 0; k < matches.mQuery.size(); ++k) {
        const Vec2 q = query[static_cast<size_t>(matches.mQuery[k])] - meanQ;
        const Vec2 t = matches.mTargets[k] - meanT;
        cross += t * q.transpose();
    }

    const double psi = std::atan2(cross(1, 0) - cross(0, 1),
                                  cross(0, 0) + cross(1, 1));
    const Vec2 t = meanT - RotationOf(psi) * meanQ;
    return Pose2(t.x(), t.y(), psi);
}

/* Fraction of the matched reference normals constraining the weaker
 * translation direction. Normals come from consecutive scan points; a
 * single straight wall collapses this to zero. */
double NormalSpread(const std::vector<Vec2>& reference,
                    const std::vector<int>& matchedRefs)
{
    constexpr double kNormalSpan = 4.0;

    std::vector<char> matched(reference.size(), 0);
    for (const int ri : matchedRefs)
        matched[static_cast<size_t>(ri)] = 1;

    Mat2 scatter = Mat2::Zero();
    int count = 0;
    for (size_t i = 1; i + 1 < reference.size(); ++i) {
        if (!matched[i])
            continue;
        const Vec2 span = reference[i + 1] - reference[i - 1];
        const double length = span.norm();
        if (length < 1.0e-9 || length > kNormalSpan)
            continue;
        const Vec2 normal(-span.y() / length, span.x() / length);
        scatter += normal * normal.transpose();
        ++count;
    }
    if (count < 3)
        return 0.0;

    const Eigen::SelfAdjointEigenSolver<Mat2> eigen(scatter / static_cast<double>(count));
    return eigen.eigenvalues()(0);
}

} /* namespace */

std::optional<ScanAlignment> AlignScans(const std::vector<Vec2>& reference,
                                        const std::vector<Vec2>& query,
                                        const Pose2& initialGuess,
                                        const LoopClosureParams& params)
{
    if (static_cast<int>(reference.size()) < params.mMinPoints ||
        static_cast<int>(query.size()) < params.mMinPoints)
        return std::nullopt;

    Pose2 relative = initialGuess;
    for (int iteration = 0; iteration < params.mMaxIterations; ++iteration) {
        const MatchSet matches = MatchPoints(reference, query, relative,
                                             params.mMatchGate);
        if (static_cast<int>(matches.mQuery.size()) < params.mMinPoints)
            return std::nullopt;

        const Pose2 refined = FitRigid(query, matches);
        const double shift = std::hypot(refined.mX - relative.mX,
                                        refined.mY - relative.mY) +
                             std::abs(WrapAngle(refined.mPsi - relative.mPsi));
        relative = refined;
        if (shift < 1.0e-10)
            break;
    }

    const MatchSet matches = MatchPoints(reference, query, relative,
                                         params.mMatchGate);
    if (static_cast<int>(matches.mQuery.size()) < params.mMinPoints ||
        matches.mRms > params.mMaxResidual)
        return std::nullopt;
    if (NormalSpread(reference, matches.mReference) < params.mMinNormalSpread)
        return std::nullopt;

    ScanAlignment alignment;
    alignment.mRelative = relative;
    alignment.mRms = matches.mRms;
    alignment.mMatchCount = static_cast<int>(matches.mQuery.size());
    return alignment;
}

std::optional<Factor> TryLoopClosure(const PoseGraph& graph,
                                     const Scan& currentScan,
                                     const std::vector<KeyframeScan>& history,
                                     const LoopClosureParams& params)
{
    if (!graph.Solved())
        throw NotSolved("TryLoopClosure: graph has not been solved");

    const int currentId = graph.NodeCount() - 1;
    const Pose2 currentEstimate = graph.Node(currentId).mEstimate;
    const std::vector<Vec2> currentPoints = ScanPointsLocal(currentScan);

    std::optional<Factor> best;
    double bestRms = std::numeric_limits<double>::max();

    for (const KeyframeScan& record : history) {
        if (record.mNodeId > currentId - params.mMinNodeGap)
            continue;
        const Pose2 pastEstimate = graph.Node(record.mNodeId).mEstimate;
        if (Distance(pastEstimate, currentEstimate) > params.mSearchRadius)
            continue;

        const Pose2 guess = Between(pastEstimate, currentEstimate);
        const auto alignment = AlignScans(record.mPoints, currentPoints, guess,
                                          params);
        if (!alignment || alignment->mRms >= bestRms)
            continue;

        /* Positional variance from the residual; the angular information
         * scales with the squared lever arm of the matched surface */
        const double variance = std::max(alignment->mRms * alignment->mRms,
                                         1.0e-6);
        Vec2 centroid = Vec2::Zero();
        for (const Vec2& point : record.mPoints)
            centroid += point;
        centroid /= static_cast<double>(record.mPoints.size());
        double leverSq = 0.0;
        for (const Vec2& point : record.mPoints)
            leverSq += (point - centroid).squaredNorm();
        leverSq /= static_cast<double>(record.mPoints.size());

        Factor factor;
        factor.mKind = FactorKind::LoopClosure;
        factor.mI = record.mNodeId;
        factor.mJ = currentId;
        factor.mMeasurement = alignment->mRelative;
        factor.mInfo = Mat3::Zero();
        factor.mInfo(0, 0) = 1.0 / variance;
        factor.mInfo(1, 1) = 1.0 / variance;
        factor.mInfo(2, 2) = std::max(leverSq, 1.0) / variance;

        best = factor;
        bestRms = alignment->mRms;
    }

    return best;
}

} /* namespace vrvm */
