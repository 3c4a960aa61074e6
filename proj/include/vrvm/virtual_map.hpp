/* virtual_map.hpp */

#ifndef VRVM_VIRTUAL_MAP_HPP
#define VRVM_VIRTUAL_MAP_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "vrvm/errors.hpp"
#include "vrvm/gaussian.hpp"
#include "vrvm/geometry.hpp"
#include "vrvm/occupancy_grid.hpp"
#include "vrvm/simulator.hpp"

namespace vrvm {

/* One Gaussian landmark standing in for the unresolved content of a
 * map cell, kept in information form. Geometry fields describe the
 * quadtree cell the landmark occupies */
struct VirtualLandmark
{
    Vec2 mMu = Vec2::Zero();
    Mat2 mInfo = Mat2::Identity();
    double mHalfSide = 0.0;
    int mDepth = 0;
    double mOcc = 0.5;
    bool mLocked = false;
};

struct VmConfig
{
    double mSigma0 = 0.5;
    double mTauDet0 = 0.04;
    double mTauP = 0.1;
    double mThetaOcc = 0.51;
    double mSigmaFix = 0.05;
    double mGamma = 1.0;
};

/* Outcome of one visible-set update pass */
struct UpdateReport
{
    int mTouched = 0;
    int mSkippedLocked = 0;
    int mSkippedOccluded = 0;

    int Total() const
    {
        return this->mTouched + this->mSkippedLocked + this->mSkippedOccluded;
    }
};

void ValidateVmConfig(const VmConfig& config);

/* Covariance of a virtual point observation taken at (range, bearing)
 * from a position with covariance `positionCov`. The position block
 * passes through an identity Jacobian; the polar sensor noise is
 * pushed through the polar-to-Cartesian Jacobian */
Mat2 PropagateObservationCov(const Mat2& positionCov, double range,
                             double bearing, double rangeVar,
                             double bearingVar);

/* Information increment contributed to the landmark at `centre` when
 * observed from `position`; the propagated covariance receives a small
 * diagonal floor before inversion so noise-free configurations stay
 * invertible */
Mat2 ObservationInformation(const Mat2& positionCov,
                            const SensorModel& sensor,
                            const Vec2& position, const Vec2& centre);

/* True when an occupied cell interrupts the segment from `position`
 * toward `centre` clearly before the cell itself is reached */
bool LeafOccluded(const OccupancyGrid& grid, const Vec2& position,
                  const Vec2& centre, double halfSide);

/* Running area-weighted sum of the per-leaf uncertainty score
 * phi = logdet(info); weights are leaf areas normalised over
 * everything added so far */
class AreaAccumulator final
{
public:
    void Add(const double halfSide, const Mat2& info)
    {
        const double area = 4.0 * halfSide * halfSide;
        this->mArea += area;
        this->mWeighted += area * LogDet2(info);
    }

    bool Empty() const { return !(this->mArea > 0.0); }

    double Value() const
    {
        if (this->Empty())
            throw EmptySet("AreaAccumulator: no leaves to evaluate");
        return this->mWeighted / this->mArea;
    }

private:
    double mArea = 0.0;
    double mWeighted = 0.0;
};

/* Area-weighted uncertainty of a leaf set; locked leaves take no part
 * in the valuation. EmptySet when nothing evaluable remains */
double AreaWeightedUncertainty(const std::vector<VirtualLandmark>& leaves);

/* Quadtree of virtual landmarks over a square closure of the given
 * bounds. The tree only ever splits; refinement is limited to the
 * sensor disc and the covered workspace, so the update cost per cycle
 * tracks the visible set instead of the full leaf count */
class QuadtreeMap final
{
public:
    QuadtreeMap(const Vec2& lower, const Vec2& upper, const VmConfig& config,
                int maxDepth = 7, double minResolution = 1.0);

    const VmConfig& Config() const { return this->mConfig; }
    int MaxDepth() const { return this->mMaxDepth; }
    double MinResolution() const { return this->mMinResolution; }
    Vec2 RootCentre() const { return this->mRootCentre; }
    double RootHalfSide() const { return this->mRootHalfSide; }

    std::size_t NodeCount() const { return this->mNodes.size(); }
    std::size_t LeafCount() const { return this->mLeafCount; }

    /* Leaves and internal nodes share one arena element layout */
    std::size_t MemoryFootprint() const
    {
        return this->mNodes.size() * sizeof(Node);
    }

    bool IsLeaf(const std::int32_t node) const
    {
        return this->mNodes[static_cast<std::size_t>(node)].IsLeaf();
    }

    /* Geometry fields stay valid for internal nodes; belief fields are
     * frozen at the moment the node was split */
    const VirtualLandmark& Landmark(const std::int32_t node) const
    {
        return this->mNodes[static_cast<std::size_t>(node)].mLeaf;
    }

    template <typename Fn>
    void ForEachLeaf(Fn&& fn) const
    {
        for (std::size_t i = 0; i < this->mNodes.size(); ++i)
            if (this->mNodes[i].IsLeaf())
                fn(static_cast<std::int32_t>(i), this->mNodes[i].mLeaf);
    }

    /* Leaves whose centre lies within range + sqrt(2) * half_side of
     * `position`; equals a brute-force membership scan of all leaves */
    std::vector<std::int32_t> VisibleSet(const Vec2& position,
                                         double range) const;

    /* Recursive split pass clipped to the sensor disc around
     * `position`. A visited leaf first refreshes its occupancy from
     * the grid cell under its centre, then splits while its covariance
     * determinant stays above the depth-scaled threshold or its
     * occupancy stays ambiguous, subject to the size floor and depth
     * cap. Children inherit the parent occupancy and restart from the
     * prior covariance. Returns the number of splits */
    int Refine(const Vec2& position, double range, const OccupancyGrid& grid);

    /* Additive information update of every unlocked, unoccluded leaf
     * visible from `position` */
    UpdateReport UpdateVisible(const Vec2& position, const Mat2& positionCov,
                               const SensorModel& sensor,
                               const OccupancyGrid& grid);

    /* Freeze every finest-resolution leaf whose centre cell reads as
     * occupied. Locked leaves keep the fixed information forever and
     * drop out of updates and valuations. Idempotent; returns the
     * number of leaves locked by this pass */
    int LockOccupied(const OccupancyGrid& grid);

    /* Area-weighted valuation over every unlocked leaf */
    double MapUncertainty() const;

    /* Line-oriented leaf records in depth-first order:
     * LEAF depth cx cy h occ locked o11 o12 o22 */
    void DumpText(std::ostream& output) const;

    /* Rebuild a tree from its dump; the root square is recovered from
     * the record bounds and every structural invariant is re-checked */
    static QuadtreeMap LoadText(std::istream& input, const VmConfig& config,
                                int maxDepth = 7, double minResolution = 1.0);

private:
    struct Node
    {
        VirtualLandmark mLeaf;
        std::array<std::int32_t, 4> mChildren { -1, -1, -1, -1 };

        bool IsLeaf() const { return this->mChildren[0] < 0; }
    };

    void SplitLeaf(std::int32_t index);
    int RefineNode(std::int32_t index, const Vec2& position, double range,
                   const OccupancyGrid& grid);
    void DumpNode(std::ostream& output, std::int32_t index) const;

    VmConfig mConfig;
    int mMaxDepth;
    double mMinResolution;
    Vec2 mRootCentre;
    double mRootHalfSide;
    std::vector<Node> mNodes;
    std::size_t mLeafCount;
};

/* Fixed-resolution twin of the quadtree map covering the same bounds
 * with one landmark per grid cell; shares the update and locking
 * behaviour, never refines */
class UniformVirtualMap final
{
public:
    UniformVirtualMap(const Vec2& lower, const Vec2& upper, double resolution,
                      const VmConfig& config);

    const VmConfig& Config() const { return this->mConfig; }
    int Width() const { return this->mWidth; }
    int Height() const { return this->mHeight; }
    double Resolution() const { return this->mResolution; }
    std::size_t CellCount() const { return this->mCells.size(); }

    std::size_t MemoryFootprint() const
    {
        return this->mCells.size() * sizeof(VirtualLandmark);
    }

    const VirtualLandmark& Landmark(const std::int32_t index) const
    {
        return this->mCells[static_cast<std::size_t>(index)];
    }

    template <typename Fn>
    void ForEachLeaf(Fn&& fn) const
    {
        for (std::size_t i = 0; i < this->mCells.size(); ++i)
            fn(static_cast<std::int32_t>(i), this->mCells[i]);
    }

    std::vector<std::int32_t> VisibleSet(const Vec2& position,
                                         double range) const;

    UpdateReport UpdateVisible(const Vec2& position, const Mat2& positionCov,
                               const SensorModel& sensor,
                               const OccupancyGrid& grid);

    int LockOccupied(const OccupancyGrid& grid);

    /* Equal cell areas reduce the area weighting to a plain mean */
    double MapUncertainty() const;

private:
    VmConfig mConfig;
    Vec2 mOrigin;
    int mWidth;
    int mHeight;
    double mResolution;
    std::vector<VirtualLandmark> mCells;
};

namespace detail {

/* Single walk over the visible set shared by the maps and the planner
 * overlay: classify each leaf, hand unlocked unoccluded ones to
 * `apply` together with their information increment */
template <typename MapT, typename Apply>
UpdateReport RunVisibleUpdate(const MapT& map, const Vec2& position,
                              const Mat2& positionCov,
                              const SensorModel& sensor,
                              const OccupancyGrid& grid, Apply&& apply)
{
    UpdateReport report;
    for (const std::int32_t index : map.VisibleSet(position,
                                                   sensor.mMaxRange)) {
        const VirtualLandmark& leaf = map.Landmark(index);
        if (leaf.mLocked) {
            ++report.mSkippedLocked;
            continue;
        }
        if (LeafOccluded(grid, position, leaf.mMu, leaf.mHalfSide)) {
            ++report.mSkippedOccluded;
            continue;
        }
        apply(index, ObservationInformation(positionCov, sensor, position,
                                            leaf.mMu));
        ++report.mTouched;
    }
    return report;
}

template <typename MapT, typename InfoFn>
void AccumulateVisible(const MapT& map, const Vec2& position,
                       const double range, InfoFn&& infoOf,
                       AreaAccumulator& accumulator)
{
    for (const std::int32_t index : map.VisibleSet(position, range)) {
        const VirtualLandmark& leaf = map.Landmark(index);
        if (leaf.mLocked)
            continue;
        accumulator.Add(leaf.mHalfSide, infoOf(index, leaf));
    }
}

} /* namespace detail */

/* Area-weighted uncertainty of the leaves visible from one position;
 * EmptySet when every visible leaf is locked or none is in range */
template <typename MapT>
double PoseUncertainty(const MapT& map, const Vec2& position,
                       const double range)
{
    AreaAccumulator accumulator;
    detail::AccumulateVisible(
        map, position, range,
        [](const std::int32_t, const VirtualLandmark& leaf) -> const Mat2& {
            return leaf.mInfo;
        },
        accumulator);
    return accumulator.Value();
}

/* Copy-on-write information overlay for candidate evaluation: the
 * planner applies hypothetical observations here while the base map
 * stays frozen. Valid only while the base is untouched */
template <typename MapT>
class InfoOverlay final
{
public:
    explicit InfoOverlay(const MapT& base) : mBase(&base)
    {
        base.ForEachLeaf([this](const std::int32_t,
                                const VirtualLandmark& leaf) {
            if (leaf.mLocked)
                return;
            const double area = 4.0 * leaf.mHalfSide * leaf.mHalfSide;
            this->mBaseArea += area;
            this->mBaseWeighted += area * LogDet2(leaf.mInfo);
        });
    }

    const MapT& Base() const { return *this->mBase; }

    const Mat2& InfoOf(const std::int32_t index) const
    {
        const auto it = this->mInfo.find(index);
        return it == this->mInfo.end() ? this->mBase->Landmark(index).mInfo
                                       : it->second;
    }

    UpdateReport UpdateVisible(const Vec2& position, const Mat2& positionCov,
                               const SensorModel& sensor,
                               const OccupancyGrid& grid)
    {
        return detail::RunVisibleUpdate(
            *this->mBase, position, positionCov, sensor, grid,
            [this](const std::int32_t index, const Mat2& increment) {
                const VirtualLandmark& leaf = this->mBase->Landmark(index);
                const auto it =
                    this->mInfo.try_emplace(index, leaf.mInfo).first;
                const double area = 4.0 * leaf.mHalfSide * leaf.mHalfSide;
                this->mWeightedDelta -= area * LogDet2(it->second);
                it->second += increment;
                this->mWeightedDelta += area * LogDet2(it->second);
            });
    }

    /* Whole-map valuation with the overlay applied, evaluated from the
     * base sums plus the running delta of the overridden leaves */
    double MapUncertainty() const
    {
        if (!(this->mBaseArea > 0.0))
            throw EmptySet("InfoOverlay: no unlocked leaves");
        return (this->mBaseWeighted + this->mWeightedDelta) / this->mBaseArea;
    }

    void Clear()
    {
        this->mInfo.clear();
        this->mWeightedDelta = 0.0;
    }

private:
    const MapT* mBase;
    std::unordered_map<std::int32_t, Mat2> mInfo;
    double mBaseArea = 0.0;
    double mBaseWeighted = 0.0;
    double mWeightedDelta = 0.0;
};

struct GainResult
{
    double mGain = 0.0;
    int mEmptySamples = 0;
};

/* Discounted uncertainty gain accumulated over sample poses: for each
 * pose the visible sets of both maps are valued with per-sample area
 * normalisation and gamma * J_after - J_before is added. A sample with
 * nothing evaluable in either map contributes nothing and is counted */
template <typename MapBefore, typename MapAfter>
GainResult SplitInvariantGain(const MapBefore& before, const MapAfter& after,
                              const std::vector<Vec2>& samples,
                              const double range, const double gamma)
{
    const auto baseInfo = [](const std::int32_t,
                             const VirtualLandmark& leaf) -> const Mat2& {
        return leaf.mInfo;
    };

    GainResult result;
    for (const Vec2& sample : samples) {
        if (!sample.allFinite())
            throw InvalidInput("SplitInvariantGain: non-finite sample pose");
        AreaAccumulator beforeAcc;
        AreaAccumulator afterAcc;
        detail::AccumulateVisible(before, sample, range, baseInfo, beforeAcc);
        detail::AccumulateVisible(after, sample, range, baseInfo, afterAcc);
        if (beforeAcc.Empty() || afterAcc.Empty()) {
            ++result.mEmptySamples;
            continue;
        }
        result.mGain += gamma * afterAcc.Value() - beforeAcc.Value();
    }
    return result;
}

/* Overlay form: one visible-set walk per sample serves both sides
 * because the overlay shares the base tree structure */
template <typename MapT>
GainResult SplitInvariantGain(const InfoOverlay<MapT>& overlay,
                              const std::vector<Vec2>& samples,
                              const double range, const double gamma)
{
    GainResult result;
    for (const Vec2& sample : samples) {
        if (!sample.allFinite())
            throw InvalidInput("SplitInvariantGain: non-finite sample pose");
        AreaAccumulator beforeAcc;
        AreaAccumulator afterAcc;
        for (const std::int32_t index :
             overlay.Base().VisibleSet(sample, range)) {
            const VirtualLandmark& leaf = overlay.Base().Landmark(index);
            if (leaf.mLocked)
                continue;
            beforeAcc.Add(leaf.mHalfSide, leaf.mInfo);
            afterAcc.Add(leaf.mHalfSide, overlay.InfoOf(index));
        }
        if (beforeAcc.Empty()) {
            ++result.mEmptySamples;
            continue;
        }
        result.mGain += gamma * afterAcc.Value() - beforeAcc.Value();
    }
    return result;
}

/* Bounds-checked convenience for the common quadtree pair */
GainResult SplitInvariantGain(const QuadtreeMap& before,
                              const QuadtreeMap& after,
                              const std::vector<Vec2>& samples, double range,
                              double gamma);

} /* namespace vrvm */

#endif /* VRVM_VIRTUAL_MAP_HPP */
