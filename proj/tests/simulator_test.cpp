/* simulator_test.cpp */

#include <gtest/gtest.h>

#include "vrvm/simulator.hpp"
#include "test_util.hpp"

using namespace vrvm;
using vrvm_test::BoxWorld;
using vrvm_test::MakeRng;
using vrvm_test::RandomConvexPolygon;

namespace {

SensorModel NoiselessSensor(const int beams, const double range = 30.0)
{
    SensorModel model;
    model.mMaxRange = range;
    model.mBeamCount = beams;
    model.mRangeStd = 0.0;
    model.mBearingStd = 0.0;
    return model;
}

} /* namespace */

TEST(StepPose, StraightLine)
{
    const Pose2 next = StepPose(Pose2(), MotionCommand(1.0, 0.0), 0.2,
                                MotionLimits());
    EXPECT_DOUBLE_EQ(0.2, next.mX);
    EXPECT_DOUBLE_EQ(0.0, next.mY);
    EXPECT_DOUBLE_EQ(0.0, next.mPsi);
}

TEST(StepPose, TurnInPlace)
{
    const Pose2 next = StepPose(Pose2(), MotionCommand(0.0, 0.5), 0.2,
                                MotionLimits());
    EXPECT_DOUBLE_EQ(0.0, next.mX);
    EXPECT_DOUBLE_EQ(0.1, next.mPsi);
}

TEST(StepPose, ReversingReturnsToStart)
{
    const Pose2 start(3.0, -2.0, 0.7);
    const Pose2 forward = StepPose(start, MotionCommand(1.5, 0.0), 0.2,
                                   MotionLimits());
    const Pose2 back = StepPose(forward, MotionCommand(-1.5, 0.0), 0.2,
                                MotionLimits());
    EXPECT_NEAR(start.mX, back.mX, 1.0e-12);
    EXPECT_NEAR(start.mY, back.mY, 1.0e-12);
    EXPECT_NEAR(start.mPsi, back.mPsi, 1.0e-12);
}

TEST(StepPose, EnforcesLimits)
{
    EXPECT_THROW(StepPose(Pose2(), MotionCommand(2.5, 0.0), 0.2,
                          MotionLimits()),
                 CommandLimit);
    EXPECT_THROW(StepPose(Pose2(), MotionCommand(0.0, 0.6), 0.2,
                          MotionLimits()),
                 CommandLimit);
    EXPECT_THROW(StepPose(Pose2(), MotionCommand(1.0, 0.0), -0.1,
                          MotionLimits()),
                 InvalidInput);
}

TEST(StepPoseNoisy, ZeroNoiseMatchesExact)
{
    auto rng = MakeRng(1);
    const Pose2 a = StepPose(Pose2(1, 2, 0.3), MotionCommand(1.0, 0.1), 0.2,
                             MotionLimits());
    const Pose2 b = StepPoseNoisy(Pose2(1, 2, 0.3), MotionCommand(1.0, 0.1),
                                  0.2, MotionLimits(), MotionNoise(), rng);
    EXPECT_DOUBLE_EQ(a.mX, b.mX);
    EXPECT_DOUBLE_EQ(a.mY, b.mY);
    EXPECT_DOUBLE_EQ(a.mPsi, b.mPsi);
}

TEST(CastScan, BoxRangesMatchGeometry)
{
    const World world = BoxWorld(5.0, 1.0);

    /* Two beams at bearings -pi/2 and +pi/2 hit floor and ceiling */
    Scan scan = CastScan(world, Pose2(), NoiselessSensor(2), 9);
    ASSERT_EQ(2u, scan.mBeams.size());
    EXPECT_TRUE(scan.mBeams[0].mHit);
    EXPECT_NEAR(5.0, scan.mBeams[0].mRange, 1.0e-9);
    EXPECT_NEAR(5.0, scan.mBeams[1].mRange, 1.0e-9);

    /* Four beams at the diagonals: wall at 5 / cos(pi/4) */
    scan = CastScan(world, Pose2(), NoiselessSensor(4), 9);
    for (const Beam& beam : scan.mBeams) {
        EXPECT_TRUE(beam.mHit);
        EXPECT_NEAR(5.0 * std::sqrt(2.0), beam.mRange, 1.0e-9);
    }
}

TEST(CastScan, MissesReportMaxRange)
{
    World world;
    world.mXMin = -50.0;
    world.mYMin = -50.0;
    world.mXMax = 50.0;
    world.mYMax = 50.0;

    const Scan scan = CastScan(world, Pose2(), NoiselessSensor(16), 3);
    for (const Beam& beam : scan.mBeams) {
        EXPECT_FALSE(beam.mHit);
        EXPECT_DOUBLE_EQ(30.0, beam.mRange);
    }
}

TEST(CastScan, DeterministicPerSeed)
{
    const World world = BoxWorld(8.0, 1.0);
    SensorModel model;
    model.mBeamCount = 36;

    const Scan a = CastScan(world, Pose2(1.0, 0.5, 0.2), model, 42);
    const Scan b = CastScan(world, Pose2(1.0, 0.5, 0.2), model, 42);
    const Scan c = CastScan(world, Pose2(1.0, 0.5, 0.2), model, 43);

    ASSERT_EQ(a.mBeams.size(), b.mBeams.size());
    bool anyDiffer = false;
    for (std::size_t i = 0; i < a.mBeams.size(); ++i) {
        EXPECT_DOUBLE_EQ(a.mBeams[i].mRange, b.mBeams[i].mRange);
        EXPECT_DOUBLE_EQ(a.mBeams[i].mBearing, b.mBeams[i].mBearing);
        EXPECT_EQ(a.mBeams[i].mHit, b.mBeams[i].mHit);
        anyDiffer |= a.mBeams[i].mRange != c.mBeams[i].mRange;
    }
    EXPECT_TRUE(anyDiffer);
}

TEST(CastScan, RangesPositiveBearingsIncreasing)
{
    const World world = BoxWorld(6.0, 1.0);
    SensorModel model;
    model.mBeamCount = 90;
    model.mRangeStd = 0.3;
    model.mBearingStd = 0.05;

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Scan scan = CastScan(world, Pose2(0.5, -0.5, 1.0), model, seed);
        double previous = -1.0e9;
        for (const Beam& beam : scan.mBeams) {
            EXPECT_GT(beam.mRange, 0.0);
            EXPECT_LE(beam.mRange, model.mMaxRange);
            EXPECT_GT(beam.mBearing, previous);
            previous = beam.mBearing;
        }
    }
}

TEST(CastScan, MatchesBruteForceEdgeLoop)
{
    auto rng = MakeRng(23);
    std::uniform_real_distribution<double> coord(-3.0, 3.0);

    World world;
    world.mXMin = -40.0;
    world.mYMin = -40.0;
    world.mXMax = 40.0;
    world.mYMax = 40.0;
    world.mObstacles.push_back(
        RandomConvexPolygon(rng, Vec2(10.0, 2.0), 4.0, 6));
    world.mObstacles.push_back(
        RandomConvexPolygon(rng, Vec2(-8.0, -6.0), 5.0, 5));
    world.mObstacles.push_back(
        RandomConvexPolygon(rng, Vec2(0.0, 12.0), 3.0, 7));

    const SensorModel model = NoiselessSensor(64);

    for (int trial = 0; trial < 25; ++trial) {
        const Pose2 pose(coord(rng), coord(rng), coord(rng));
        const Scan scan = CastScan(world, pose, model, 0);

        ASSERT_EQ(static_cast<std::size_t>(model.mBeamCount),
                  scan.mBeams.size());
        for (const Beam& beam : scan.mBeams) {
            /* Independent check: intersect every edge of every polygon
             * with the beam ray and keep the smallest hit */
            const double heading = pose.mPsi + beam.mBearing;
            const Vec2 dir(std::cos(heading), std::sin(heading));
            const Vec2 origin = pose.Position();
            double expected = std::numeric_limits<double>::infinity();
            for (const Polygon& poly : world.mObstacles) {
                const auto& verts = poly.Vertices();
                for (std::size_t i = 0; i < verts.size(); ++i) {
                    const Vec2 a = verts[i];
                    const Vec2 b = verts[(i + 1) % verts.size()];
                    const double d = dir.x() * (b.y() - a.y()) -
                                     dir.y() * (b.x() - a.x());
                    if (std::abs(d) < 1.0e-14)
                        continue;
                    const double t = ((a.x() - origin.x()) * (b.y() - a.y()) -
                                      (a.y() - origin.y()) * (b.x() - a.x())) / d;
                    const double s = ((a.x() - origin.x()) * dir.y() -
                                      (a.y() - origin.y()) * dir.x()) / d;
                    if (t > 1.0e-9 && s >= 0.0 && s <= 1.0)
                        expected = std::min(expected, t);
                }
            }
            if (expected <= model.mMaxRange) {
                EXPECT_TRUE(beam.mHit);
                EXPECT_NEAR(expected, beam.mRange, 1.0e-9);
            } else {
                EXPECT_FALSE(beam.mHit);
                EXPECT_DOUBLE_EQ(model.mMaxRange, beam.mRange);
            }
        }
    }
}

TEST(ScanPointsLocal, OnlyHitsContribute)
{
    Scan scan;
    scan.mBeams.emplace_back(0.0, 10.0, true);
    scan.mBeams.emplace_back(kPi / 2.0, 30.0, false);
    scan.mBeams.emplace_back(kPi / 2.0, 2.0, true);

    const auto points = ScanPointsLocal(scan);
    ASSERT_EQ(2u, points.size());
    EXPECT_NEAR(10.0, points[0].x(), 1.0e-12);
    EXPECT_NEAR(2.0, points[1].y(), 1.0e-12);
}
