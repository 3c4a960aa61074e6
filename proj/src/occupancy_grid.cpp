/* occupancy_grid.cpp */

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>

#include "vrvm/occupancy_grid.hpp"

namespace vrvm {

namespace {

constexpr double kLogOddsClamp = 10.0;

inline double LogitOf(const double p)
{
    return std::log(p / (1.0 - p));
}

} /* namespace */

OccupancyGrid::OccupancyGrid(const double originX, const double originY,
                             const int width, const int height,
                             const double resolution,
                             const double occupiedThreshold) :
    mOriginX(originX),
    mOriginY(originY),
    mWidth(width),
    mHeight(height),
    mResolution(resolution),
    mOccupiedThreshold(occupiedThreshold),
    mOccupiedLogOdds(LogitOf(occupiedThreshold)),
    mLogOdds(static_cast<std::size_t>(width) * height, 0.0),
    mFirstOccupiedStep(static_cast<std::size_t>(width) * height, -1),
    mEverOccupied(static_cast<std::size_t>(width) * height, 0)
{
    if (width < 1 || height < 1)
        throw InvalidInput("OccupancyGrid: empty grid");
    if (!(resolution > 0.0))
        throw InvalidInput("OccupancyGrid: resolution must be positive");
    if (!(occupiedThreshold > 0.5) || !(occupiedThreshold < 1.0))
        throw InvalidInput("OccupancyGrid: threshold must lie in (0.5, 1)");
}

OccupancyGrid OccupancyGrid::FromBounds(const double xmin, const double ymin,
                                        const double xmax, const double ymax,
                                        const double resolution,
                                        const double occupiedThreshold)
{
    if (!(xmax > xmin) || !(ymax > ymin))
        throw InvalidInput("OccupancyGrid: empty bounds");
    const int width = static_cast<int>(
        std::ceil((xmax - xmin) / resolution - 1.0e-9));
    const int height = static_cast<int>(
        std::ceil((ymax - ymin) / resolution - 1.0e-9));
    return OccupancyGrid(xmin, ymin, width, height, resolution,
                         occupiedThreshold);
}

void OccupancyGrid::CheckIndex(const int ix, const int iy) const
{
    if (!this->Inside(ix, iy))
        throw OutOfBounds("OccupancyGrid: cell index outside the map");
}

double OccupancyGrid::LogOdds(const int ix, const int iy) const
{
    this->CheckIndex(ix, iy);
    return this->mLogOdds[this->Index(ix, iy)];
}

double OccupancyGrid::Probability(const int ix, const int iy) const
{
    this->CheckIndex(ix, iy);
    return Logistic(this->mLogOdds[this->Index(ix, iy)]);
}

double OccupancyGrid::ProbabilityAt(const Vec2& point) const
{
    return this->Probability(this->CellX(point.x()),
                             this->CellY(point.y()));
}

void OccupancyGrid::ApplyIncrement(const int ix, const int iy,
                                   const double increment, const int step)
{
    const std::size_t idx = this->Index(ix, iy);
    this->mLogOdds[idx] = std::clamp(this->mLogOdds[idx] + increment,
                                     -kLogOddsClamp, kLogOddsClamp);
    if (this->mLogOdds[idx] >= this->mOccupiedLogOdds) {
        this->mEverOccupied[idx] = 1;
        if (this->mFirstOccupiedStep[idx] < 0)
            this->mFirstOccupiedStep[idx] = step;
    }
}

void OccupancyGrid::SetLogOdds(const int ix, const int iy,
                               const double value, const int step)
{
    this->CheckIndex(ix, iy);
    const std::size_t idx = this->Index(ix, iy);
    this->mLogOdds[idx] = std::clamp(value, -kLogOddsClamp, kLogOddsClamp);
    if (this->mLogOdds[idx] >= this->mOccupiedLogOdds) {
        this->mEverOccupied[idx] = 1;
        if (this->mFirstOccupiedStep[idx] < 0)
            this->mFirstOccupiedStep[idx] = step;
    }
}

void OccupancyGrid::IntegrateScan(const Pose2& pose, const Scan& scan,
                                  const double hitLogOdds,
                                  const double missLogOdds, const int step)
{
    const Vec2 origin = pose.Position();

    for (const Beam& beam : scan.mBeams) {
        const double heading = pose.mPsi + beam.mBearing;
        const Vec2 dir(std::cos(heading), std::sin(heading));
        const Vec2 endpoint = origin + beam.mRange * dir;
        /* Nudge the endpoint along the beam so hits landing exactly
         * on a cell edge resolve into the struck cell */
        const Vec2 nudged = endpoint + (1.0e-6 * this->mResolution) * dir;
        const int endX = this->CellX(nudged.x());
        const int endY = this->CellY(nudged.y());

        this->TraverseRay(origin, nudged,
            [&](const int ix, const int iy) {
                const bool atEnd = ix == endX && iy == endY;
                if (atEnd && beam.mHit)
                    this->ApplyIncrement(ix, iy, hitLogOdds, step);
                else
                    this->ApplyIncrement(ix, iy, missLogOdds, step);
                return true;
            });
    }
}

std::vector<Frontier> OccupancyGrid::ExtractFrontiers(
    const FrontierParams& params, const int currentStep) const
{
    std::vector<Frontier> result;

    /* Exploring frontiers: free cells with a 4-neighbour in unknown
     * space, clustered by 4-connectivity */
    std::vector<std::uint8_t> isFrontier(this->mLogOdds.size(), 0);
    for (int iy = 0; iy < this->mHeight; ++iy) {
        for (int ix = 0; ix < this->mWidth; ++ix) {
            if (!this->IsFree(ix, iy))
                continue;
            const bool touchesUnknown =
                (ix > 0 && this->IsUnknown(ix - 1, iy)) ||
                (ix + 1 < this->mWidth && this->IsUnknown(ix + 1, iy)) ||
                (iy > 0 && this->IsUnknown(ix, iy - 1)) ||
                (iy + 1 < this->mHeight && this->IsUnknown(ix, iy + 1));
            if (touchesUnknown)
                isFrontier[this->Index(ix, iy)] = 1;
        }
    }

    std::vector<std::uint8_t> seen(this->mLogOdds.size(), 0);
    for (int iy = 0; iy < this->mHeight; ++iy) {
        for (int ix = 0; ix < this->mWidth; ++ix) {
            const std::size_t rootIdx = this->Index(ix, iy);
            if (!isFrontier[rootIdx] || seen[rootIdx])
                continue;

            std::vector<std::pair<int, int>> cluster;
            std::deque<std::pair<int, int>> queue;
            queue.emplace_back(ix, iy);
            seen[rootIdx] = 1;
            while (!queue.empty()) {
                const auto [cx, cy] = queue.front();
                queue.pop_front();
                cluster.emplace_back(cx, cy);
                const std::pair<int, int> neighbours[4] = {
                    {cx - 1, cy}, {cx + 1, cy}, {cx, cy - 1}, {cx, cy + 1}};
                for (const auto& [nx, ny] : neighbours) {
                    if (!this->Inside(nx, ny))
                        continue;
                    const std::size_t nIdx = this->Index(nx, ny);
                    if (isFrontier[nIdx] && !seen[nIdx]) {
                        seen[nIdx] = 1;
                        queue.emplace_back(nx, ny);
                    }
                }
            }

            if (static_cast<int>(cluster.size()) < params.mMinClusterSize)
                continue;

            /* Representative: the cluster cell nearest the centroid
             * (the centroid itself may fall on non-free space) */
            Vec2 centroid = Vec2::Zero();
            for (const auto& [cx, cy] : cluster)
                centroid += this->CellCentre(cx, cy);
            centroid /= static_cast<double>(cluster.size());

            double bestDist = std::numeric_limits<double>::infinity();
            Vec2 bestCentre = centroid;
            for (const auto& [cx, cy] : cluster) {
                const Vec2 centre = this->CellCentre(cx, cy);
                const double dist = (centre - centroid).squaredNorm();
                if (dist < bestDist) {
                    bestDist = dist;
                    bestCentre = centre;
                }
            }

            Frontier frontier;
            frontier.mPosition = bestCentre;
            frontier.mKind = Frontier::Kind::Exploring;
            frontier.mClusterSize = static_cast<int>(cluster.size());
            result.push_back(frontier);
        }
    }

    /* Exploit frontiers: free cells on a coarse stride that stand
     * near structure first mapped at least mExploitAge steps ago */
    const int stride = std::max(1, static_cast<int>(
        std::round(params.mExploitSpacing / this->mResolution)));
    const int radiusCells = static_cast<int>(
        std::ceil(params.mExploitRadius / this->mResolution));

    for (int iy = stride / 2; iy < this->mHeight; iy += stride) {
        for (int ix = stride / 2; ix < this->mWidth; ix += stride) {
            if (!this->IsFree(ix, iy))
                continue;
            const Vec2 centre = this->CellCentre(ix, iy);

            int structureCount = 0;
            double nearest = std::numeric_limits<double>::infinity();
            for (int oy = std::max(0, iy - radiusCells);
                 oy <= std::min(this->mHeight - 1, iy + radiusCells); ++oy) {
                for (int ox = std::max(0, ix - radiusCells);
                     ox <= std::min(this->mWidth - 1, ix + radiusCells);
                     ++ox) {
                    if (!this->IsOccupied(ox, oy))
                        continue;
                    const std::int32_t born =
                        this->mFirstOccupiedStep[this->Index(ox, oy)];
                    if (born < 0 || currentStep - born < params.mExploitAge)
                        continue;
                    const double dist = (this->CellCentre(ox, oy) -
                                         centre).norm();
                    if (dist <= params.mExploitRadius) {
                        ++structureCount;
                        nearest = std::min(nearest, dist);
                    }
                }
            }

            if (structureCount == 0 || nearest < params.mExploitStandoff)
                continue;

            Frontier frontier;
            frontier.mPosition = centre;
            frontier.mKind = Frontier::Kind::Exploit;
            frontier.mClusterSize = structureCount;
            result.push_back(frontier);
        }
    }

    /* Largest clusters first; discovery order breaks ties so the
     * outcome is stable across runs */
    std::stable_sort(result.begin(), result.end(),
                     [](const Frontier& a, const Frontier& b) {
                         return a.mClusterSize > b.mClusterSize;
                     });
    if (static_cast<int>(result.size()) > params.mMaxFrontiers)
        result.resize(params.mMaxFrontiers);
    for (std::size_t i = 0; i < result.size(); ++i)
        result[i].mId = static_cast<int>(i);
    return result;
}

bool OccupancyGrid::IsPathFree(const std::vector<Vec2>& polyline,
                               const double inflation,
                               const double unknownOkRadius) const
{
    if (polyline.empty())
        return true;

    const Vec2 start = polyline.front();
    const double sampleSpacing = 0.5 * this->mResolution;
    const int radiusCells = static_cast<int>(
        std::ceil(inflation / this->mResolution));

    auto sampleBlocked = [&](const Vec2& point) {
        const int ix = this->CellX(point.x());
        const int iy = this->CellY(point.y());
        if (!this->Inside(ix, iy))
            return true;

        /* No occupied cell inside the inflation disc */
        for (int oy = iy - radiusCells; oy <= iy + radiusCells; ++oy) {
            for (int ox = ix - radiusCells; ox <= ix + radiusCells; ++ox) {
                if (!this->Inside(ox, oy)) {
                    /* Discs poking outside the map count as blocked */
                    if ((this->CellCentre(ox, oy) - point).norm() <=
                        inflation)
                        return true;
                    continue;
                }
                if (this->IsOccupied(ox, oy) &&
                    (this->CellCentre(ox, oy) - point).norm() <= inflation)
                    return true;
            }
        }

        if (this->IsFree(ix, iy))
            return false;
        if (this->IsUnknown(ix, iy))
            return (point - start).norm() > unknownOkRadius;
        /* Between unknown and the occupied threshold: not traversable */
        return true;
    };

    for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
        const Vec2 a = polyline[i];
        const Vec2 b = polyline[i + 1];
        const double length = (b - a).norm();
        const int samples = std::max(1, static_cast<int>(
            std::ceil(length / sampleSpacing)));
        for (int s = 0; s <= samples; ++s) {
            const Vec2 point = a + (static_cast<double>(s) / samples) *
                (b - a);
            if (sampleBlocked(point))
                return false;
        }
    }
    if (polyline.size() == 1)
        return !sampleBlocked(polyline.front());
    return true;
}

void OccupancyGrid::ExportText(std::ostream& output) const
{
    output << "format: 1\n";
    output << "origin: " << this->mOriginX << ' ' << this->mOriginY << '\n';
    output << "resolution: " << this->mResolution << '\n';
    output << "size: " << this->mWidth << ' ' << this->mHeight << '\n';
    output.precision(4);
    output << std::fixed;
    for (int iy = 0; iy < this->mHeight; ++iy) {
        for (int ix = 0; ix < this->mWidth; ++ix) {
            if (ix > 0)
                output << ' ';
            output << Logistic(this->mLogOdds[this->Index(ix, iy)]);
        }
        output << '\n';
    }
    output.unsetf(std::ios_base::floatfield);
}

} /* namespace vrvm */
