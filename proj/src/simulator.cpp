/* simulator.cpp */

#include <algorithm>
#include <cmath>

#include "vrvm/errors.hpp"
#include "vrvm/simulator.hpp"

namespace vrvm {

Pose2 StepPose(const Pose2& pose, const MotionCommand& cmd, const double dt,
               const MotionLimits& limits)
{
    if (!std::isfinite(dt) || dt <= 0.0)
        throw InvalidInput("StepPose: dt must be positive and finite");
    if (!std::isfinite(cmd.mSurge) || !std::isfinite(cmd.mYawRate))
        throw InvalidInput("StepPose: command is not finite");
    if (std::abs(cmd.mSurge) > limits.mMaxSurge)
        throw CommandLimit("StepPose: surge exceeds limit");
    if (std::abs(cmd.mYawRate) > limits.mMaxYawRate)
        throw CommandLimit("StepPose: yaw rate exceeds limit");

    const double c = std::cos(pose.mPsi);
    const double s = std::sin(pose.mPsi);
    return Pose2(pose.mX + dt * cmd.mSurge * c,
                 pose.mY + dt * cmd.mSurge * s,
                 pose.mPsi + dt * cmd.mYawRate);
}

Pose2 StepPoseNoisy(const Pose2& pose, const MotionCommand& cmd,
                    const double dt, const MotionLimits& limits,
                    const MotionNoise& noise, std::mt19937_64& rng)
{
    const Pose2 exact = StepPose(pose, cmd, dt, limits);

    std::normal_distribution<double> unit(0.0, 1.0);
    const double nx = unit(rng) * noise.mXStd;
    const double ny = unit(rng) * noise.mYStd;
    const double npsi = unit(rng) * noise.mPsiStd;

    /* Positional noise is drawn in the body frame of the starting pose */
    const double c = std::cos(pose.mPsi);
    const double s = std::sin(pose.mPsi);
    return Pose2(exact.mX + c * nx - s * ny,
                 exact.mY + s * nx + c * ny,
                 exact.mPsi + npsi);
}

Scan CastScan(const World& world, const Pose2& pose,
              const SensorModel& model, const std::uint64_t seed)
{
    if (model.mBeamCount < 1)
        throw InvalidInput("CastScan: beam count must be positive");
    if (!(model.mMaxRange > 0.0) || !(model.mFov > 0.0) ||
        model.mFov > 2.0 * kPi + 1.0e-12)
        throw InvalidInput("CastScan: bad range or field of view");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    const Vec2 origin = pose.Position();
    const double spacing = model.mFov / model.mBeamCount;
    /* Keep reported bearings strictly increasing under noise */
    const double maxBearingShift = 0.49 * spacing;

    Scan scan;
    scan.mBeams.reserve(model.mBeamCount);

    for (int i = 0; i < model.mBeamCount; ++i) {
        const double bearing = -0.5 * model.mFov + (i + 0.5) * spacing;
        const double heading = pose.mPsi + bearing;
        const Vec2 direction(std::cos(heading), std::sin(heading));

        double range = std::numeric_limits<double>::infinity();
        for (const Polygon& obstacle : world.mObstacles) {
            const double centreDist = (obstacle.Centroid() - origin).norm();
            if (centreDist - obstacle.BoundingRadius() > model.mMaxRange)
                continue;
            range = std::min(range, obstacle.RayIntersect(origin, direction));
        }

        /* Two draws per beam regardless of outcome so that the noise
         * stream does not depend on the world contents */
        const double bearingNoise = unit(rng) * model.mBearingStd;
        const double rangeNoise = unit(rng) * model.mRangeStd;

        const double reportedBearing = bearing +
            std::clamp(bearingNoise, -maxBearingShift, maxBearingShift);

        if (range <= model.mMaxRange) {
            const double reported = std::clamp(range + rangeNoise,
                                               1.0e-6, model.mMaxRange);
            scan.mBeams.emplace_back(reportedBearing, reported, true);
        } else {
            scan.mBeams.emplace_back(reportedBearing, model.mMaxRange, false);
        }
    }
    return scan;
}

std::vector<Vec2> ScanPointsLocal(const Scan& scan)
{
    std::vector<Vec2> points;
    points.reserve(scan.mBeams.size());
    for (const Beam& beam : scan.mBeams)
        if (beam.mHit)
            points.emplace_back(beam.mRange * std::cos(beam.mBearing),
                                beam.mRange * std::sin(beam.mBearing));
    return points;
}

} /* namespace vrvm */
