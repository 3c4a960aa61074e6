/* occupancy_grid.hpp */

#ifndef VRVM_OCCUPANCY_GRID_HPP
#define VRVM_OCCUPANCY_GRID_HPP

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "vrvm/errors.hpp"
#include "vrvm/geometry.hpp"
#include "vrvm/simulator.hpp"

namespace vrvm {

/* Candidate goal extracted from the grid */
struct Frontier
{
    enum class Kind
    {
        Exploring,
        Exploit
    };

    Frontier() : mKind(Kind::Exploring), mClusterSize(0), mId(-1) { }

    Vec2 mPosition;
    Kind mKind;
    int mClusterSize;
    int mId;
};

struct FrontierParams
{
    int mMinClusterSize = 8;
    int mMaxFrontiers = 100;
    double mExploitRadius = 10.0;
    int mExploitAge = 30;
    double mExploitSpacing = 5.0;
    double mExploitStandoff = 2.0;
};

/* Log-odds occupancy grid. Cells start at exactly 0 (unknown); hits
 * and misses add clamped increments. A cell is occupied once its
 * probability reaches the configured threshold, free when its
 * log-odds is negative */
class OccupancyGrid final
{
public:
    OccupancyGrid(double originX, double originY, int width, int height,
                  double resolution, double occupiedThreshold = 0.51);

    static OccupancyGrid FromBounds(double xmin, double ymin,
                                    double xmax, double ymax,
                                    double resolution,
                                    double occupiedThreshold = 0.51);

    int Width() const { return this->mWidth; }
    int Height() const { return this->mHeight; }
    double Resolution() const { return this->mResolution; }
    double OriginX() const { return this->mOriginX; }
    double OriginY() const { return this->mOriginY; }
    double OccupiedThreshold() const { return this->mOccupiedThreshold; }
    std::size_t CellCount() const { return this->mLogOdds.size(); }

    bool Inside(const int ix, const int iy) const
    {
        return ix >= 0 && ix < this->mWidth && iy >= 0 && iy < this->mHeight;
    }

    int CellX(const double x) const
    {
        return static_cast<int>(std::floor((x - this->mOriginX) /
                                           this->mResolution));
    }
    int CellY(const double y) const
    {
        return static_cast<int>(std::floor((y - this->mOriginY) /
                                           this->mResolution));
    }
    Vec2 CellCentre(const int ix, const int iy) const
    {
        return Vec2(this->mOriginX + (ix + 0.5) * this->mResolution,
                    this->mOriginY + (iy + 0.5) * this->mResolution);
    }

    double LogOdds(int ix, int iy) const;

    /* Probability through the logistic function; OutOfBounds on a
     * bad index */
    double Probability(int ix, int iy) const;
    double ProbabilityAt(const Vec2& point) const;

    bool IsUnknown(const int ix, const int iy) const
    {
        return this->mLogOdds[this->Index(ix, iy)] == 0.0;
    }
    bool IsFree(const int ix, const int iy) const
    {
        return this->mLogOdds[this->Index(ix, iy)] < 0.0;
    }
    bool IsOccupied(const int ix, const int iy) const
    {
        return this->mLogOdds[this->Index(ix, iy)] >=
               this->mOccupiedLogOdds;
    }
    bool EverOccupied(const int ix, const int iy) const
    {
        return this->mEverOccupied[this->Index(ix, iy)] != 0;
    }

    /* Fold one scan taken from `pose` into the grid. Cells traversed
     * by a beam receive the miss increment, the endpoint cell the hit
     * increment (hit beams only). `step` feeds the structure age used
     * by exploit frontier extraction */
    void IntegrateScan(const Pose2& pose, const Scan& scan,
                       double hitLogOdds, double missLogOdds, int step);

    /* Overwrite one cell (clamped), keeping the occupancy bookkeeping
     * consistent; intended for synthetic map construction */
    void SetLogOdds(int ix, int iy, double value, int step = 0);

    /* Exploring frontiers: clustered free cells adjacent to unknown
     * space. Exploit frontiers: free cells standing near structure
     * that was first mapped at least mExploitAge steps ago. Capped at
     * mMaxFrontiers, largest clusters first */
    std::vector<Frontier> ExtractFrontiers(const FrontierParams& params,
                                           int currentStep) const;

    /* A polyline is traversable when no inflated sample touches an
     * occupied cell and every sample lies on known-free space, except
     * that unknown cells count as traversable within
     * `unknownOkRadius` of the polyline start */
    bool IsPathFree(const std::vector<Vec2>& polyline, double inflation,
                    double unknownOkRadius) const;

    /* Greymap-style text export (header, then probability rows from
     * the bottom row upward) */
    void ExportText(std::ostream& output) const;

    /* Visit the cells crossed by the segment from `from` to `to` in
     * order, both endpoint cells included, cells outside the grid
     * skipped. Visitor returns false to stop the walk early */
    template <typename Visitor>
    void TraverseRay(const Vec2& from, const Vec2& to,
                     Visitor&& visit) const;

    std::size_t Index(const int ix, const int iy) const
    {
        return static_cast<std::size_t>(iy) * this->mWidth + ix;
    }

private:
    void CheckIndex(int ix, int iy) const;
    void ApplyIncrement(int ix, int iy, double increment, int step);

    double mOriginX;
    double mOriginY;
    int mWidth;
    int mHeight;
    double mResolution;
    double mOccupiedThreshold;
    double mOccupiedLogOdds;
    std::vector<double> mLogOdds;
    std::vector<std::int32_t> mFirstOccupiedStep;
    std::vector<std::uint8_t> mEverOccupied;
};

inline double Logistic(const double logOdds)
{
    return 1.0 / (1.0 + std::exp(-logOdds));
}

template <typename Visitor>
void OccupancyGrid::TraverseRay(const Vec2& from, const Vec2& to,
                                Visitor&& visit) const
{
    int ix = this->CellX(from.x());
    int iy = this->CellY(from.y());
    const int endX = this->CellX(to.x());
    const int endY = this->CellY(to.y());

    const double dx = to.x() - from.x();
    const double dy = to.y() - from.y();
    const int stepX = dx > 0.0 ? 1 : -1;
    const int stepY = dy > 0.0 ? 1 : -1;

    /* Parametric distance to the next vertical/horizontal cell line */
    double tMaxX = std::numeric_limits<double>::infinity();
    double tMaxY = std::numeric_limits<double>::infinity();
    double tDeltaX = std::numeric_limits<double>::infinity();
    double tDeltaY = std::numeric_limits<double>::infinity();

    if (dx != 0.0) {
        const double nextX = this->mOriginX +
            (ix + (stepX > 0 ? 1 : 0)) * this->mResolution;
        tMaxX = (nextX - from.x()) / dx;
        tDeltaX = this->mResolution / std::abs(dx);
    }
    if (dy != 0.0) {
        const double nextY = this->mOriginY +
            (iy + (stepY > 0 ? 1 : 0)) * this->mResolution;
        tMaxY = (nextY - from.y()) / dy;
        tDeltaY = this->mResolution / std::abs(dy);
    }

    const int maxCells = std::abs(endX - ix) + std::abs(endY - iy) + 1;
    for (int i = 0; i < maxCells; ++i) {
        if (this->Inside(ix, iy))
            if (!visit(ix, iy))
                return;
        if (ix == endX && iy == endY)
            return;
        if (tMaxX < tMaxY) {
            tMaxX += tDeltaX;
            ix += stepX;
        } else {
            tMaxY += tDeltaY;
            iy += stepY;
        }
    }
}

} /* namespace vrvm */

#endif /* VRVM_OCCUPANCY_GRID_HPP */
