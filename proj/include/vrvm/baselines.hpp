/* baselines.hpp */

#ifndef VRVM_BASELINES_HPP
#define VRVM_BASELINES_HPP

#include <vector>

#include "vrvm/geometry.hpp"
#include "vrvm/occupancy_grid.hpp"

namespace vrvm {

/* Utilities for the geometry and information baselines. They share
 * the SLAM backbone and grid interface with the main planner and
 * differ only in how a candidate goal is scored */

struct NbvConfig
{
    double mWUnknown = 1.0;
    double mWOverlap = 0.5;
    double mAlpha = 0.05;
    double mBeta = 0.2;
    double mViewStepDeg = 3.0;
    double mOverlapRadius = 15.0;
};

struct FsmiConfig
{
    double mLambdaLength = 0.08;
    double mBeta = 0.2;
    double mRayStepDeg = 6.0;
    double mPriorFree = 0.03;
    double mPriorOccupied = 0.97;
    double mPriorUnknown = 0.5;
    double mHitLogOdds = 2.0;
    double mMissLogOdds = -2.0;
};

/* Breadth-first travel cost from one start cell over the inflated
 * grid, four-connected. Unknown cells are not traversable; the cost
 * of a cell is its hop count times the grid resolution. The start
 * cell always costs zero, even when it sits inside the inflation
 * margin of a wall */
class DistanceField final
{
public:
    DistanceField(const OccupancyGrid& grid, const Vec2& start,
                  double inflation);

    bool Reachable(const Vec2& point) const;

    /* Infinity when the point is unreachable or outside the grid */
    double Cost(const Vec2& point) const;

private:
    double mOriginX;
    double mOriginY;
    int mWidth;
    int mHeight;
    double mResolution;
    std::vector<double> mCost;
};

/* Nearest-frontier score: negative travel cost. Unreachable
 * frontiers score negative infinity and are skipped by the caller */
double NfUtility(const DistanceField& field, const Frontier& frontier);

/* Unique unknown cells with a clear line of sight from the goal,
 * counted over a full ray fan at the given angular step. Rays stop
 * at the first occupied cell */
double NbvGain(const Vec2& goal, const OccupancyGrid& grid,
               double sensorRange, double viewStepDeg);

/* Absolute heading change needed to face the goal; zero when the
 * goal coincides with the robot position */
double HeadingChange(const Pose2& robot, const Vec2& goal);

double NbvUtility(const Vec2& goal, const OccupancyGrid& grid,
                  const Pose2& robot, double pathCost,
                  const std::vector<Vec2>& recentGoals,
                  double sensorRange, const NbvConfig& config);

/* Expected entropy reduction of a single cell under one simulated
 * beam: entropy now minus the hit/miss-weighted entropy after the
 * log-odds update. Saturated cells (at or beyond the free/occupied
 * priors) carry none */
double CellMutualInformation(double probability, const FsmiConfig& config);

/* Sum of per-cell mutual information accumulated along rays at the
 * configured angular step, each walked to the first occupied cell or
 * to sensor range. Cell states are snapped to the trinary priors */
double FsmiMutualInformation(const Vec2& goal, const OccupancyGrid& grid,
                             double sensorRange, const FsmiConfig& config);

double FsmiUtility(const Vec2& goal, const OccupancyGrid& grid,
                   const Pose2& robot, double pathCost,
                   double sensorRange, const FsmiConfig& config);

} /* namespace vrvm */

#endif /* VRVM_BASELINES_HPP */
