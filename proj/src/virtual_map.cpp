/* virtual_map.cpp */

#include "vrvm/virtual_map.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>

namespace vrvm {

namespace {

/* Diagonal floor added to the propagated covariance before inversion */
const double kInfoEpsilon = 1.0e-9;

double RectDistance(const Vec2& point, const Vec2& centre,
                    const double halfSide)
{
    const double dx =
        std::max(std::abs(point.x() - centre.x()) - halfSide, 0.0);
    const double dy =
        std::max(std::abs(point.y() - centre.y()) - halfSide, 0.0);
    return std::sqrt(dx * dx + dy * dy);
}

bool RectIntersectsGrid(const OccupancyGrid& grid, const Vec2& centre,
                        const double halfSide)
{
    const double gx0 = grid.OriginX();
    const double gy0 = grid.OriginY();
    const double gx1 = gx0 + grid.Width() * grid.Resolution();
    const double gy1 = gy0 + grid.Height() * grid.Resolution();
    return centre.x() + halfSide >= gx0 && centre.x() - halfSide <= gx1 &&
           centre.y() + halfSide >= gy0 && centre.y() - halfSide <= gy1;
}

Mat2 PriorInformation(const VmConfig& config)
{
    return (1.0 / (config.mSigma0 * config.mSigma0)) * Mat2::Identity();
}

Mat2 LockInformation(const VmConfig& config)
{
    return (1.0 / (config.mSigmaFix * config.mSigmaFix)) * Mat2::Identity();
}

} /* namespace */

void ValidateVmConfig(const VmConfig& config)
{
    if (!(config.mSigma0 > 0.0) || !(config.mSigmaFix > 0.0))
        throw InvalidInput("VmConfig: standard deviations must be positive");
    if (!(config.mTauDet0 > 0.0))
        throw InvalidInput("VmConfig: split threshold must be positive");
    if (!(config.mTauP >= 0.0) || !(config.mTauP <= 0.5))
        throw InvalidInput("VmConfig: ambiguity half-width outside [0, 0.5]");
    if (!(config.mThetaOcc > 0.0) || !(config.mThetaOcc < 1.0))
        throw InvalidInput("VmConfig: occupancy threshold outside (0, 1)");
    if (!(config.mGamma > 0.0) || !(config.mGamma <= 1.0))
        throw InvalidInput("VmConfig: discount factor outside (0, 1]");
}

Mat2 PropagateObservationCov(const Mat2& positionCov, const double range,
                             const double bearing, const double rangeVar,
                             const double bearingVar)
{
    detail::CheckFinite2(positionCov, "PropagateObservationCov");
    detail::CheckSymmetric2(positionCov, "PropagateObservationCov");
    if (!std::isfinite(range) || !std::isfinite(bearing) || range < 0.0)
        throw InvalidInput("PropagateObservationCov: bad beam geometry");
    if (rangeVar < 0.0 || bearingVar < 0.0)
        throw InvalidInput("PropagateObservationCov: negative variance");

    const double c = std::cos(bearing);
    const double s = std::sin(bearing);
    Mat2 jac;
    jac << c, -range * s,
           s,  range * c;
    Mat2 noise = Mat2::Zero();
    noise(0, 0) = rangeVar;
    noise(1, 1) = bearingVar;
    return positionCov + jac * noise * jac.transpose();
}

Mat2 ObservationInformation(const Mat2& positionCov,
                            const SensorModel& sensor, const Vec2& position,
                            const Vec2& centre)
{
    const Vec2 offset = centre - position;
    const double range = offset.norm();
    const double bearing = std::atan2(offset.y(), offset.x());
    Mat2 cov = PropagateObservationCov(
        positionCov, range, bearing, sensor.mRangeStd * sensor.mRangeStd,
        sensor.mBearingStd * sensor.mBearingStd);
    cov += kInfoEpsilon * Mat2::Identity();
    return Invert2(cov);
}

bool LeafOccluded(const OccupancyGrid& grid, const Vec2& position,
                  const Vec2& centre, const double halfSide)
{
    const double range = (centre - position).norm();
    const double clearance =
        std::max(std::sqrt(2.0) * halfSide, grid.Resolution());
    const double limit = range - clearance;
    if (limit <= 0.0)
        return false;

    bool blocked = false;
    grid.TraverseRay(position, centre, [&](const int ix, const int iy) {
        if (!grid.IsOccupied(ix, iy))
            return true;
        if ((grid.CellCentre(ix, iy) - position).norm() < limit) {
            blocked = true;
            return false;
        }
        return true;
    });
    return blocked;
}

double AreaWeightedUncertainty(const std::vector<VirtualLandmark>& leaves)
{
    AreaAccumulator accumulator;
    for (const VirtualLandmark& leaf : leaves)
        if (!leaf.mLocked)
            accumulator.Add(leaf.mHalfSide, leaf.mInfo);
    return accumulator.Value();
}

QuadtreeMap::QuadtreeMap(const Vec2& lower, const Vec2& upper,
                         const VmConfig& config, const int maxDepth,
                         const double minResolution) :
    mConfig(config),
    mMaxDepth(maxDepth),
    mMinResolution(minResolution),
    mLeafCount(1)
{
    ValidateVmConfig(config);
    if (!(upper.x() > lower.x()) || !(upper.y() > lower.y()))
        throw InvalidInput("QuadtreeMap: empty bounds");
    if (maxDepth < 0)
        throw InvalidInput("QuadtreeMap: negative depth cap");
    if (!(minResolution > 0.0))
        throw InvalidInput("QuadtreeMap: resolution floor must be positive");

    this->mRootCentre = 0.5 * (lower + upper);
    this->mRootHalfSide =
        0.5 * std::max(upper.x() - lower.x(), upper.y() - lower.y());

    Node root;
    root.mLeaf.mMu = this->mRootCentre;
    root.mLeaf.mInfo = PriorInformation(config);
    root.mLeaf.mHalfSide = this->mRootHalfSide;
    root.mLeaf.mDepth = 0;
    this->mNodes.push_back(root);
}

std::vector<std::int32_t> QuadtreeMap::VisibleSet(const Vec2& position,
                                                  const double range) const
{
    if (!(range > 0.0))
        throw InvalidInput("VisibleSet: range must be positive");
    if (!position.allFinite())
        throw InvalidInput("VisibleSet: non-finite position");

    std::vector<std::int32_t> visible;
    std::vector<std::int32_t> stack { 0 };
    while (!stack.empty()) {
        const std::int32_t index = stack.back();
        stack.pop_back();
        const Node& node = this->mNodes[static_cast<std::size_t>(index)];
        const VirtualLandmark& leaf = node.mLeaf;
        if (node.IsLeaf()) {
            if ((leaf.mMu - position).norm() <=
                range + std::sqrt(2.0) * leaf.mHalfSide)
                visible.push_back(index);
            continue;
        }
        /* A subtree clear of the padded disc holds no visible leaf */
        if (RectDistance(position, leaf.mMu, leaf.mHalfSide) >
            range + std::sqrt(2.0) * leaf.mHalfSide)
            continue;
        for (auto child = node.mChildren.rbegin();
             child != node.mChildren.rend(); ++child)
            stack.push_back(*child);
    }
    return visible;
}

void QuadtreeMap::SplitLeaf(const std::int32_t index)
{
    const VirtualLandmark parent =
        this->mNodes[static_cast<std::size_t>(index)].mLeaf;
    const double childHalf = 0.5 * parent.mHalfSide;
    const Mat2 prior = PriorInformation(this->mConfig);

    std::array<std::int32_t, 4> children;
    for (int i = 0; i < 4; ++i) {
        Node node;
        node.mLeaf.mMu = parent.mMu + Vec2((i & 1) ? childHalf : -childHalf,
                                           (i & 2) ? childHalf : -childHalf);
        node.mLeaf.mInfo = prior;
        node.mLeaf.mHalfSide = childHalf;
        node.mLeaf.mDepth = parent.mDepth + 1;
        node.mLeaf.mOcc = parent.mOcc;
        node.mLeaf.mLocked = false;
        children[i] = static_cast<std::int32_t>(this->mNodes.size());
        this->mNodes.push_back(node);
    }
    this->mNodes[static_cast<std::size_t>(index)].mChildren = children;
    this->mLeafCount += 3;
}

int QuadtreeMap::Refine(const Vec2& position, const double range,
                        const OccupancyGrid& grid)
{
    if (!(range > 0.0))
        throw InvalidInput("Refine: range must be positive");
    if (!position.allFinite())
        throw InvalidInput("Refine: non-finite position");
    return this->RefineNode(0, position, range, grid);
}

int QuadtreeMap::RefineNode(const std::int32_t index, const Vec2& position,
                            const double range, const OccupancyGrid& grid)
{
    const Vec2 centre =
        this->mNodes[static_cast<std::size_t>(index)].mLeaf.mMu;
    const double halfSide =
        this->mNodes[static_cast<std::size_t>(index)].mLeaf.mHalfSide;

    /* Only cells reaching into the sensor disc may refine */
    if (RectDistance(position, centre, halfSide) > range)
        return 0;

    if (!this->mNodes[static_cast<std::size_t>(index)].IsLeaf()) {
        const std::array<std::int32_t, 4> children =
            this->mNodes[static_cast<std::size_t>(index)].mChildren;
        int splits = 0;
        for (const std::int32_t child : children)
            splits += this->RefineNode(child, position, range, grid);
        return splits;
    }

    /* The workspace rectangle, not the square root cell, is the
     * refinable domain; padding around a non-square world stays coarse */
    if (!RectIntersectsGrid(grid, centre, halfSide))
        return 0;

    {
        const int ix = grid.CellX(centre.x());
        const int iy = grid.CellY(centre.y());
        if (grid.Inside(ix, iy))
            this->mNodes[static_cast<std::size_t>(index)].mLeaf.mOcc =
                grid.Probability(ix, iy);
    }

    const VirtualLandmark leaf =
        this->mNodes[static_cast<std::size_t>(index)].mLeaf;
    if (!(leaf.mHalfSide > 0.5 * this->mMinResolution) ||
        leaf.mDepth >= this->mMaxDepth)
        return 0;

    const double detInfo = leaf.mInfo(0, 0) * leaf.mInfo(1, 1) -
                           leaf.mInfo(0, 1) * leaf.mInfo(1, 0);
    const double detSigma = 1.0 / detInfo;
    const double threshold =
        std::ldexp(this->mConfig.mTauDet0, -2 * leaf.mDepth);
    const bool uncertain = detSigma >= threshold;
    const bool ambiguous =
        std::abs(leaf.mOcc - 0.5) <= this->mConfig.mTauP;
    if (!uncertain && !ambiguous)
        return 0;

    this->SplitLeaf(index);
    int splits = 1;
    const std::array<std::int32_t, 4> children =
        this->mNodes[static_cast<std::size_t>(index)].mChildren;
    for (const std::int32_t child : children)
        splits += this->RefineNode(child, position, range, grid);
    return splits;
}

UpdateReport QuadtreeMap::UpdateVisible(const Vec2& position,
                                        const Mat2& positionCov,
                                        const SensorModel& sensor,
                                        const OccupancyGrid& grid)
{
    return detail::RunVisibleUpdate(
        *this, position, positionCov, sensor, grid,
        [this](const std::int32_t index, const Mat2& increment) {
            this->mNodes[static_cast<std::size_t>(index)].mLeaf.mInfo +=
                increment;
        });
}

int QuadtreeMap::LockOccupied(const OccupancyGrid& grid)
{
    const Mat2 lockInfo = LockInformation(this->mConfig);
    int locked = 0;
    for (Node& node : this->mNodes) {
        if (!node.IsLeaf() || node.mLeaf.mLocked)
            continue;
        /* Finest resolution means the leaf could not split further */
        if (node.mLeaf.mHalfSide > 0.5 * this->mMinResolution &&
            node.mLeaf.mDepth < this->mMaxDepth)
            continue;
        const int ix = grid.CellX(node.mLeaf.mMu.x());
        const int iy = grid.CellY(node.mLeaf.mMu.y());
        if (!grid.Inside(ix, iy))
            continue;
        if (grid.Probability(ix, iy) >= this->mConfig.mThetaOcc) {
            node.mLeaf.mInfo = lockInfo;
            node.mLeaf.mLocked = true;
            ++locked;
        }
    }
    return locked;
}

double QuadtreeMap::MapUncertainty() const
{
    AreaAccumulator accumulator;
    this->ForEachLeaf([&](const std::int32_t, const VirtualLandmark& leaf) {
        if (!leaf.mLocked)
            accumulator.Add(leaf.mHalfSide, leaf.mInfo);
    });
    return accumulator.Value();
}

void QuadtreeMap::DumpNode(std::ostream& output,
                           const std::int32_t index) const
{
    const Node& node = this->mNodes[static_cast<std::size_t>(index)];
    if (!node.IsLeaf()) {
        for (const std::int32_t child : node.mChildren)
            this->DumpNode(output, child);
        return;
    }
    const VirtualLandmark& leaf = node.mLeaf;
    output << "LEAF " << leaf.mDepth << ' ' << leaf.mMu.x() << ' '
           << leaf.mMu.y() << ' ' << leaf.mHalfSide << ' ' << leaf.mOcc
           << ' ' << (leaf.mLocked ? 1 : 0) << ' ' << leaf.mInfo(0, 0) << ' '
           << leaf.mInfo(0, 1) << ' ' << leaf.mInfo(1, 1) << '\n';
}

void QuadtreeMap::DumpText(std::ostream& output) const
{
    const std::streamsize previous =
        output.precision(std::numeric_limits<double>::max_digits10);
    this->DumpNode(output, 0);
    output.precision(previous);
}

namespace {

struct LeafRecord
{
    int mDepth = 0;
    Vec2 mCentre = Vec2::Zero();
    double mHalfSide = 0.0;
    double mOcc = 0.5;
    int mLocked = 0;
    Mat2 mInfo = Mat2::Identity();
};

LeafRecord ParseLeafLine(const std::string& line)
{
    std::istringstream stream(line);
    std::string tag;
    LeafRecord record;
    double o11 = 0.0;
    double o12 = 0.0;
    double o22 = 0.0;
    stream >> tag >> record.mDepth >> record.mCentre.x() >>
        record.mCentre.y() >> record.mHalfSide >> record.mOcc >>
        record.mLocked >> o11 >> o12 >> o22;
    if (!stream || tag != "LEAF")
        throw InvalidInput("map dump: malformed leaf record");
    std::string trailing;
    if (stream >> trailing)
        throw InvalidInput("map dump: trailing tokens on leaf record");
    if (record.mDepth < 0 || !(record.mHalfSide > 0.0))
        throw InvalidInput("map dump: bad leaf geometry");
    if (!(record.mOcc >= 0.0) || !(record.mOcc <= 1.0))
        throw InvalidInput("map dump: occupancy outside [0, 1]");
    if (record.mLocked != 0 && record.mLocked != 1)
        throw InvalidInput("map dump: locked flag must be 0 or 1");
    if (!(o11 > 0.0) || !(o11 * o22 - o12 * o12 > 0.0))
        throw InvalidInput("map dump: information is not positive definite");
    record.mInfo << o11, o12,
                    o12, o22;
    return record;
}

} /* namespace */

QuadtreeMap QuadtreeMap::LoadText(std::istream& input, const VmConfig& config,
                                  const int maxDepth,
                                  const double minResolution)
{
    std::vector<LeafRecord> records;
    std::string line;
    while (std::getline(input, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        records.push_back(ParseLeafLine(line));
    }
    if (records.empty())
        throw InvalidInput("map dump: no leaf records");

    double minX = std::numeric_limits<double>::infinity();
    double maxX = -std::numeric_limits<double>::infinity();
    double minY = std::numeric_limits<double>::infinity();
    double maxY = -std::numeric_limits<double>::infinity();
    for (const LeafRecord& record : records) {
        minX = std::min(minX, record.mCentre.x() - record.mHalfSide);
        maxX = std::max(maxX, record.mCentre.x() + record.mHalfSide);
        minY = std::min(minY, record.mCentre.y() - record.mHalfSide);
        maxY = std::max(maxY, record.mCentre.y() + record.mHalfSide);
    }

    const double tolerance = 1.0e-9 * std::max(1.0, maxX - minX);
    if (std::abs((maxX - minX) - (maxY - minY)) > tolerance)
        throw InvalidInput("map dump: record bounds are not square");

    QuadtreeMap map(Vec2(minX, minY), Vec2(maxX, maxY), config, maxDepth,
                    minResolution);

    for (const LeafRecord& record : records) {
        if (record.mDepth > maxDepth)
            throw InvalidInput("map dump: leaf deeper than the depth cap");
        if (std::abs(std::ldexp(record.mHalfSide, record.mDepth) -
                     map.mRootHalfSide) > tolerance)
            throw InvalidInput("map dump: leaf size inconsistent with root");
    }

    std::unordered_set<std::int32_t> filled;
    for (const LeafRecord& record : records) {
        std::int32_t index = 0;
        for (int depth = 0; depth < record.mDepth; ++depth) {
            if (map.mNodes[static_cast<std::size_t>(index)].IsLeaf()) {
                if (filled.count(index) != 0)
                    throw InvalidInput("map dump: overlapping leaf records");
                map.SplitLeaf(index);
            }
            const Vec2 centre =
                map.mNodes[static_cast<std::size_t>(index)].mLeaf.mMu;
            const int quadrant =
                (record.mCentre.x() > centre.x() ? 1 : 0) +
                (record.mCentre.y() > centre.y() ? 2 : 0);
            index = map.mNodes[static_cast<std::size_t>(index)]
                        .mChildren[static_cast<std::size_t>(quadrant)];
        }

        Node& node = map.mNodes[static_cast<std::size_t>(index)];
        if (!node.IsLeaf() || filled.count(index) != 0)
            throw InvalidInput("map dump: overlapping leaf records");
        if ((node.mLeaf.mMu - record.mCentre).cwiseAbs().maxCoeff() >
            tolerance)
            throw InvalidInput("map dump: leaf centre off the cell lattice");
        node.mLeaf.mOcc = record.mOcc;
        node.mLeaf.mLocked = record.mLocked != 0;
        node.mLeaf.mInfo = record.mInfo;
        filled.insert(index);
    }

    for (std::size_t i = 0; i < map.mNodes.size(); ++i)
        if (map.mNodes[i].IsLeaf() &&
            filled.count(static_cast<std::int32_t>(i)) == 0)
            throw InvalidInput("map dump: records do not tile the root");

    return map;
}

UniformVirtualMap::UniformVirtualMap(const Vec2& lower, const Vec2& upper,
                                     const double resolution,
                                     const VmConfig& config) :
    mConfig(config),
    mOrigin(lower)
{
    ValidateVmConfig(config);
    if (!(upper.x() > lower.x()) || !(upper.y() > lower.y()))
        throw InvalidInput("UniformVirtualMap: empty bounds");
    if (!(resolution > 0.0))
        throw InvalidInput("UniformVirtualMap: resolution must be positive");

    this->mResolution = resolution;
    this->mWidth = static_cast<int>(
        std::ceil((upper.x() - lower.x()) / resolution - 1.0e-9));
    this->mHeight = static_cast<int>(
        std::ceil((upper.y() - lower.y()) / resolution - 1.0e-9));

    const Mat2 prior = PriorInformation(config);
    this->mCells.resize(static_cast<std::size_t>(this->mWidth) *
                        static_cast<std::size_t>(this->mHeight));
    for (int iy = 0; iy < this->mHeight; ++iy) {
        for (int ix = 0; ix < this->mWidth; ++ix) {
            VirtualLandmark& cell =
                this->mCells[static_cast<std::size_t>(iy) *
                                 static_cast<std::size_t>(this->mWidth) +
                             static_cast<std::size_t>(ix)];
            cell.mMu = Vec2(lower.x() + (ix + 0.5) * resolution,
                            lower.y() + (iy + 0.5) * resolution);
            cell.mInfo = prior;
            cell.mHalfSide = 0.5 * resolution;
            cell.mDepth = 0;
        }
    }
}

std::vector<std::int32_t> UniformVirtualMap::VisibleSet(
    const Vec2& position, const double range) const
{
    if (!(range > 0.0))
        throw InvalidInput("VisibleSet: range must be positive");
    if (!position.allFinite())
        throw InvalidInput("VisibleSet: non-finite position");

    const double reach =
        range + std::sqrt(2.0) * 0.5 * this->mResolution;
    const int ix0 = std::max(
        0, static_cast<int>(std::floor(
               (position.x() - reach - this->mOrigin.x()) /
               this->mResolution)));
    const int ix1 = std::min(
        this->mWidth - 1,
        static_cast<int>(std::floor(
            (position.x() + reach - this->mOrigin.x()) / this->mResolution)));
    const int iy0 = std::max(
        0, static_cast<int>(std::floor(
               (position.y() - reach - this->mOrigin.y()) /
               this->mResolution)));
    const int iy1 = std::min(
        this->mHeight - 1,
        static_cast<int>(std::floor(
            (position.y() + reach - this->mOrigin.y()) / this->mResolution)));

    std::vector<std::int32_t> visible;
    for (int iy = iy0; iy <= iy1; ++iy) {
        for (int ix = ix0; ix <= ix1; ++ix) {
            const std::int32_t index = static_cast<std::int32_t>(
                iy * this->mWidth + ix);
            const VirtualLandmark& cell =
                this->mCells[static_cast<std::size_t>(index)];
            if ((cell.mMu - position).norm() <=
                range + std::sqrt(2.0) * cell.mHalfSide)
                visible.push_back(index);
        }
    }
    return visible;
}

UpdateReport UniformVirtualMap::UpdateVisible(const Vec2& position,
                                              const Mat2& positionCov,
                                              const SensorModel& sensor,
                                              const OccupancyGrid& grid)
{
    return detail::RunVisibleUpdate(
        *this, position, positionCov, sensor, grid,
        [this](const std::int32_t index, const Mat2& increment) {
            this->mCells[static_cast<std::size_t>(index)].mInfo += increment;
        });
}

int UniformVirtualMap::LockOccupied(const OccupancyGrid& grid)
{
    const Mat2 lockInfo = LockInformation(this->mConfig);
    int locked = 0;
    for (VirtualLandmark& cell : this->mCells) {
        if (cell.mLocked)
            continue;
        const int ix = grid.CellX(cell.mMu.x());
        const int iy = grid.CellY(cell.mMu.y());
        if (!grid.Inside(ix, iy))
            continue;
        if (grid.Probability(ix, iy) >= this->mConfig.mThetaOcc) {
            cell.mInfo = lockInfo;
            cell.mLocked = true;
            ++locked;
        }
    }
    return locked;
}

double UniformVirtualMap::MapUncertainty() const
{
    AreaAccumulator accumulator;
    for (const VirtualLandmark& cell : this->mCells)
        if (!cell.mLocked)
            accumulator.Add(cell.mHalfSide, cell.mInfo);
    return accumulator.Value();
}

GainResult SplitInvariantGain(const QuadtreeMap& before,
                              const QuadtreeMap& after,
                              const std::vector<Vec2>& samples,
                              const double range, const double gamma)
{
    if ((before.RootCentre() - after.RootCentre()).norm() > 1.0e-9 ||
        std::abs(before.RootHalfSide() - after.RootHalfSide()) > 1.0e-9)
        throw InvalidInput("SplitInvariantGain: maps cover different bounds");
    return SplitInvariantGain<QuadtreeMap, QuadtreeMap>(before, after,
                                                        samples, range,
                                                        gamma);
}

} /* namespace vrvm */
