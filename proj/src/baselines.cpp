/* baselines.cpp */

#include "vrvm/baselines.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <unordered_set>
#include <utility>

namespace vrvm {

namespace {

double Entropy(const double p)
{
    if (p <= 0.0 || p >= 1.0)
        return 0.0;
    return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

} /* namespace */

DistanceField::DistanceField(const OccupancyGrid& grid, const Vec2& start,
                             const double inflation)
    : mOriginX(grid.OriginX()),
      mOriginY(grid.OriginY()),
      mWidth(grid.Width()),
      mHeight(grid.Height()),
      mResolution(grid.Resolution())
{
    if (!(inflation >= 0.0))
        throw InvalidInput("DistanceField: negative inflation");

    const int sx = grid.CellX(start.x());
    const int sy = grid.CellY(start.y());
    if (!grid.Inside(sx, sy))
        throw OutOfBounds("DistanceField: start outside the grid");

    /* Stamp the inflation disc around every occupied cell */
    std::vector<std::uint8_t> blocked(grid.CellCount(), 0);
    const int radius =
        static_cast<int>(std::ceil(inflation / this->mResolution));
    for (int iy = 0; iy < this->mHeight; ++iy) {
        for (int ix = 0; ix < this->mWidth; ++ix) {
            if (!grid.IsOccupied(ix, iy))
                continue;
            for (int oy = -radius; oy <= radius; ++oy) {
                for (int ox = -radius; ox <= radius; ++ox) {
                    const int jx = ix + ox;
                    const int jy = iy + oy;
                    if (!grid.Inside(jx, jy))
                        continue;
                    if (std::hypot(ox, oy) * this->mResolution <= inflation)
                        blocked[grid.Index(jx, jy)] = 1;
                }
            }
        }
    }

    this->mCost.assign(grid.CellCount(),
                       std::numeric_limits<double>::infinity());
    this->mCost[grid.Index(sx, sy)] = 0.0;
    std::queue<std::pair<int, int>> frontier;
    frontier.push({ sx, sy });
    while (!frontier.empty()) {
        const auto [cx, cy] = frontier.front();
        frontier.pop();
        const double next =
            this->mCost[grid.Index(cx, cy)] + this->mResolution;
        constexpr int kOffsets[4][2] = {
            { 1, 0 }, { -1, 0 }, { 0, 1 }, { 0, -1 }
        };
        for (const auto& offset : kOffsets) {
            const int nx = cx + offset[0];
            const int ny = cy + offset[1];
            if (!grid.Inside(nx, ny))
                continue;
            const std::size_t index = grid.Index(nx, ny);
            if (std::isfinite(this->mCost[index]))
                continue;
            if (!grid.IsFree(nx, ny) || blocked[index] != 0)
                continue;
            this->mCost[index] = next;
            frontier.push({ nx, ny });
        }
    }
}

bool DistanceField::Reachable(const Vec2& point) const
{
    return std::isfinite(this->Cost(point));
}

double DistanceField::Cost(const Vec2& point) const
{
    const int ix = static_cast<int>(
        std::floor((point.x() - this->mOriginX) / this->mResolution));
    const int iy = static_cast<int>(
        std::floor((point.y() - this->mOriginY) / this->mResolution));
    if (ix < 0 || ix >= this->mWidth || iy < 0 || iy >= this->mHeight)
        return std::numeric_limits<double>::infinity();
    return this->mCost[static_cast<std::size_t>(iy) * this->mWidth + ix];
}

double NfUtility(const DistanceField& field, const Frontier& frontier)
{
    return -field.Cost(frontier.mPosition);
}

double NbvGain(const Vec2& goal, const OccupancyGrid& grid,
               const double sensorRange, const double viewStepDeg)
{
    if (!(sensorRange > 0.0) || !(viewStepDeg > 0.0))
        throw InvalidInput("NbvGain: range and step must be positive");

    std::unordered_set<std::size_t> seen;
    const int rayCount = static_cast<int>(std::round(360.0 / viewStepDeg));
    for (int k = 0; k < rayCount; ++k) {
        const double angle = k * viewStepDeg * kPi / 180.0;
        const Vec2 tip = goal +
            sensorRange * Vec2(std::cos(angle), std::sin(angle));
        grid.TraverseRay(goal, tip, [&](const int ix, const int iy) {
            if (grid.IsOccupied(ix, iy))
                return false;
            if (grid.IsUnknown(ix, iy))
                seen.insert(grid.Index(ix, iy));
            return true;
        });
    }
    return static_cast<double>(seen.size());
}

double HeadingChange(const Pose2& robot, const Vec2& goal)
{
    const Vec2 offset = goal - robot.Position();
    if (offset.norm() < 1.0e-12)
        return 0.0;
    return std::abs(
        WrapAngle(std::atan2(offset.y(), offset.x()) - robot.mPsi));
}

double NbvUtility(const Vec2& goal, const OccupancyGrid& grid,
                  const Pose2& robot, const double pathCost,
                  const std::vector<Vec2>& recentGoals,
                  const double sensorRange, const NbvConfig& config)
{
    const double gain =
        NbvGain(goal, grid, sensorRange, config.mViewStepDeg);
    double overlap = 0.0;
    for (const Vec2& previous : recentGoals)
        if ((previous - goal).norm() <= config.mOverlapRadius)
            overlap += 1.0;
    return config.mWUnknown * gain - config.mWOverlap * overlap -
           config.mAlpha * pathCost -
           config.mBeta * HeadingChange(robot, goal);
}

double CellMutualInformation(const double probability,
                             const FsmiConfig& config)
{
    if (probability <= config.mPriorFree ||
        probability >= config.mPriorOccupied)
        return 0.0;
    const double logOdds = std::log(probability / (1.0 - probability));
    const double hitChance = probability * config.mPriorOccupied +
                             (1.0 - probability) * config.mPriorFree;
    const double afterHit = Logistic(logOdds + config.mHitLogOdds);
    const double afterMiss = Logistic(logOdds + config.mMissLogOdds);
    return Entropy(probability) - hitChance * Entropy(afterHit) -
           (1.0 - hitChance) * Entropy(afterMiss);
}

double FsmiMutualInformation(const Vec2& goal, const OccupancyGrid& grid,
                             const double sensorRange,
                             const FsmiConfig& config)
{
    if (!(sensorRange > 0.0) || !(config.mRayStepDeg > 0.0))
        throw InvalidInput("FsmiMutualInformation: bad range or step");

    double information = 0.0;
    const int rayCount =
        static_cast<int>(std::round(360.0 / config.mRayStepDeg));
    for (int k = 0; k < rayCount; ++k) {
        const double angle = k * config.mRayStepDeg * kPi / 180.0;
        const Vec2 tip = goal +
            sensorRange * Vec2(std::cos(angle), std::sin(angle));
        grid.TraverseRay(goal, tip, [&](const int ix, const int iy) {
            double snapped = config.mPriorUnknown;
            if (grid.IsOccupied(ix, iy))
                snapped = config.mPriorOccupied;
            else if (grid.IsFree(ix, iy))
                snapped = config.mPriorFree;
            information += CellMutualInformation(snapped, config);
            return !grid.IsOccupied(ix, iy);
        });
    }
    return information;
}

double FsmiUtility(const Vec2& goal, const OccupancyGrid& grid,
                   const Pose2& robot, const double pathCost,
                   const double sensorRange, const FsmiConfig& config)
{
    return FsmiMutualInformation(goal, grid, sensorRange, config) -
           config.mLambdaLength * pathCost -
           config.mBeta * HeadingChange(robot, goal);
}

} /* namespace vrvm */
