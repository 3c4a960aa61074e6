/* simulator.hpp */

#ifndef VRVM_SIMULATOR_HPP
#define VRVM_SIMULATOR_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "vrvm/geometry.hpp"
#include "vrvm/world.hpp"

namespace vrvm {

/* Body-frame velocity command: surge (m/s) and yaw rate (rad/s) */
struct MotionCommand
{
    MotionCommand() : mSurge(0.0), mYawRate(0.0) { }
    MotionCommand(const double surge, const double yawRate) :
        mSurge(surge), mYawRate(yawRate) { }

    double mSurge;
    double mYawRate;
};

struct MotionLimits
{
    double mMaxSurge = 2.0;
    double mMaxYawRate = 0.5;
};

/* Per-step standard deviations of the additive body-frame noise */
struct MotionNoise
{
    double mXStd = 0.0;
    double mYStd = 0.0;
    double mPsiStd = 0.0;
};

/* Discrete unicycle step, exact (no noise); throws CommandLimit when
 * the command exceeds the actuator limits */
Pose2 StepPose(const Pose2& pose, const MotionCommand& cmd, double dt,
               const MotionLimits& limits);

/* Same step with an additive zero-mean Gaussian perturbation, drawn
 * in the body frame of the starting pose (three draws: x, y, psi) */
Pose2 StepPoseNoisy(const Pose2& pose, const MotionCommand& cmd, double dt,
                    const MotionLimits& limits, const MotionNoise& noise,
                    std::mt19937_64& rng);

struct SensorModel
{
    double mMaxRange = 30.0;
    double mFov = 2.0 * kPi;
    int mBeamCount = 72;
    double mRangeStd = 0.05;
    double mBearingStd = 0.002;
};

/* One range reading; bearing is in the sensor frame */
struct Beam
{
    Beam() : mBearing(0.0), mRange(0.0), mHit(false) { }
    Beam(const double bearing, const double range, const bool hit) :
        mBearing(bearing), mRange(range), mHit(hit) { }

    double mBearing;
    double mRange;
    bool mHit;
};

struct Scan
{
    std::vector<Beam> mBeams;
};

/* Cast all beams against the obstacle set. Pure for a fixed seed:
 * the same arguments always produce the same scan */
Scan CastScan(const World& world, const Pose2& pose,
              const SensorModel& model, std::uint64_t seed);

/* Hit endpoints of a scan in the sensor (body) frame */
std::vector<Vec2> ScanPointsLocal(const Scan& scan);

} /* namespace vrvm */

#endif /* VRVM_SIMULATOR_HPP */
