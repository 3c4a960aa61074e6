/* pose_graph_test.cpp */

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "vrvm/loop_closure.hpp"
#include "vrvm/pose_graph.hpp"
#include "vrvm/simulator.hpp"
#include "test_util.hpp"

using namespace vrvm;
using vrvm_test::BoxWorld;
using vrvm_test::MakeRng;
using vrvm_test::RandomSpd3;

namespace {

void ExpectPoseNear(const Pose2& expected, const Pose2& actual, const double tol)
{
    EXPECT_NEAR(expected.mX, actual.mX, tol);
    EXPECT_NEAR(expected.mY, actual.mY, tol);
    EXPECT_NEAR(0.0, WrapAngle(actual.mPsi - expected.mPsi), tol);
}

Mat3 DiagInfo(const double xy, const double psi)
{
    Mat3 info = Mat3::Zero();
    info(0, 0) = xy;
    info(1, 1) = xy;
    info(2, 2) = psi;
    return info;
}

/* The residual model restated for the oracle: absolute error for the prior,
 * relative-pose error for binary factors, angles wrapped */
Vec3 OracleResidual(const Factor& factor, const std::vector<Pose2>& states)
{
    if (factor.mJ < 0) {
        const Pose2& xi = states[static_cast<size_t>(factor.mI)];
        return Vec3(xi.mX - factor.mMeasurement.mX,
                    xi.mY - factor.mMeasurement.mY,
                    WrapAngle(xi.mPsi - factor.mMeasurement.mPsi));
    }
    const Pose2 rel = Between(states[static_cast<size_t>(factor.mI)],
                              states[static_cast<size_t>(factor.mJ)]);
    return Vec3(rel.mX - factor.mMeasurement.mX,
                rel.mY - factor.mMeasurement.mY,
                WrapAngle(rel.mPsi - factor.mMeasurement.mPsi));
}

void OracleJacobians(const Factor& factor, const std::vector<Pose2>& states,
                     Mat3& jacI, Mat3& jacJ)
{
    if (factor.mJ < 0) {
        jacI.setIdentity();
        jacJ.setZero();
        return;
    }
    const Pose2& xi = states[static_cast<size_t>(factor.mI)];
    const Pose2& xj = states[static_cast<size_t>(factor.mJ)];
    const double c = std::cos(xi.mPsi);
    const double s = std::sin(xi.mPsi);
    const double dx = xj.mX - xi.mX;
    const double dy = xj.mY - xi.mY;
    jacI << -c, -s, -s * dx + c * dy,
             s, -c, -c * dx - s * dy,
             0.0, 0.0, -1.0;
    jacJ <<  c,  s, 0.0,
            -s,  c, 0.0,
             0.0, 0.0, 1.0;
}

/* Full information matrix assembled densely from the oracle model */
Eigen::MatrixXd DenseHessian(const PoseGraph& graph)
{
    const int count = graph.NodeCount();
    std::vector<Pose2> states;
    states.reserve(static_cast<size_t>(count));
    for (int id = 0; id < count; ++id)
        states.push_back(graph.Node(id).mEstimate);

    Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(3 * count, 3 * count);
    for (const Factor& factor : graph.Factors()) {
        Mat3 jacI;
        Mat3 jacJ;
        OracleJacobians(factor, states, jacI, jacJ);
        const int rowI = 3 * factor.mI;
        hessian.block<3, 3>(rowI, rowI) += jacI.transpose() * factor.mInfo * jacI;
        if (factor.mJ >= 0) {
            const int rowJ = 3 * factor.mJ;
            hessian.block<3, 3>(rowI, rowJ) += jacI.transpose() * factor.mInfo * jacJ;
            hessian.block<3, 3>(rowJ, rowI) += jacJ.transpose() * factor.mInfo * jacI;
            hessian.block<3, 3>(rowJ, rowJ) += jacJ.transpose() * factor.mInfo * jacJ;
        }
    }
    return hessian;
}

PoseGraph RandomChainGraph(std::mt19937_64& rng, const int nodeCount,
                           const int closureCount)
{
    std::uniform_real_distribution<double> forward(0.5, 2.0);
    std::uniform_real_distribution<double> lateral(-0.3, 0.3);
    std::uniform_real_distribution<double> turn(-0.5, 0.5);
    std::uniform_real_distribution<double> nudge(-0.05, 0.05);

    PoseGraph graph(Pose2(0.0, 0.0, 0.0), RandomSpd3(rng, 10.0, 100.0));
    for (int id = 1; id < nodeCount; ++id)
        graph.AddKeyframe(Pose2(forward(rng), lateral(rng), turn(rng)),
                          RandomSpd3(rng, 1.0, 100.0));

    std::uniform_int_distribution<int> pick(0, nodeCount - 1);
    for (int k = 0; k < closureCount; ++k) {
        int i = pick(rng);
        int j = pick(rng);
        if (i == j)
            continue;
        if (i > j)
            std::swap(i, j);
        Factor closure;
        closure.mKind = FactorKind::LoopClosure;
        closure.mI = i;
        closure.mJ = j;
        closure.mMeasurement = Compose(
            Between(graph.Node(i).mEstimate, graph.Node(j).mEstimate),
            Pose2(nudge(rng), nudge(rng), nudge(rng)));
        closure.mInfo = RandomSpd3(rng, 1.0, 100.0);
        graph.AddFactor(closure);
    }
    return graph;
}

std::string DumpToString(const PoseGraph& graph)
{
    std::ostringstream out;
    graph.Dump(out);
    return out.str();
}

} /* namespace */

TEST(PoseGraph, PriorOnlySolveAndMarginal)
{
    PoseGraph graph(Pose2(2.0, -1.0, 0.5), DiagInfo(100.0, 100.0));

    EXPECT_THROW(graph.MarginalCovariance(0), NotSolved);

    graph.Solve();
    ExpectPoseNear(Pose2(2.0, -1.0, 0.5), graph.Node(0).mEstimate, 1.0e-12);

    const Gaussian3 marginal = graph.MarginalCovariance(0);
    EXPECT_NEAR(0.01, marginal.mCov(0, 0), 1.0e-12);
    EXPECT_NEAR(0.01, marginal.mCov(1, 1), 1.0e-12);
    EXPECT_NEAR(0.01, marginal.mCov(2, 2), 1.0e-12);
    EXPECT_NEAR(0.0, marginal.mCov(0, 1), 1.0e-12);
}

TEST(PoseGraph, AddKeyframeComposesEstimates)
{
    PoseGraph graph(Pose2(1.0, 2.0, 0.0), DiagInfo(100.0, 100.0));
    const int id = graph.AddKeyframe(Pose2(1.0, 0.0, 0.0), DiagInfo(50.0, 50.0));
    EXPECT_EQ(1, id);
    ExpectPoseNear(Pose2(2.0, 2.0, 0.0), graph.Node(1).mEstimate, 1.0e-12);

    PoseGraph chain(Pose2(0.0, 0.0, 0.0), DiagInfo(100.0, 100.0));
    for (int k = 0; k < 3; ++k)
        chain.AddKeyframe(Pose2(1.0, 0.0, 0.0), DiagInfo(50.0, 50.0));
    ExpectPoseNear(Pose2(3.0, 0.0, 0.0), chain.Node(3).mEstimate, 1.0e-12);

    PoseGraph turning(Pose2(0.0, 0.0, 0.0), DiagInfo(100.0, 100.0));
    turning.AddKeyframe(Pose2(1.0, 0.0, kPi / 2.0), DiagInfo(50.0, 50.0));
    turning.AddKeyframe(Pose2(1.0, 0.0, kPi / 2.0), DiagInfo(50.0, 50.0));
    ExpectPoseNear(Pose2(1.0, 1.0, kPi), turning.Node(2).mEstimate, 1.0e-12);
}

TEST(PoseGraph, RejectsDegenerateInformation)
{
    Mat3 asymmetric = Mat3::Identity();
    asymmetric(0, 1) = 0.5;
    EXPECT_THROW(PoseGraph(Pose2(), asymmetric), DegenerateMatrix);

    Mat3 indefinite = Mat3::Identity();
    indefinite(2, 2) = -1.0;
    PoseGraph graph(Pose2(), DiagInfo(100.0, 100.0));
    EXPECT_THROW(graph.AddKeyframe(Pose2(1.0, 0.0, 0.0), indefinite),
                 DegenerateMatrix);
}

TEST(PoseGraph, AddFactorValidatesEndpoints)
{
    PoseGraph graph(Pose2(), DiagInfo(100.0, 100.0));
    graph.AddKeyframe(Pose2(1.0, 0.0, 0.0), DiagInfo(50.0, 50.0));

    Factor factor;
    factor.mKind = FactorKind::LoopClosure;
    factor.mI = 0;
    factor.mJ = 5;
    EXPECT_THROW(graph.AddFactor(factor), InvalidInput);

    factor.mJ = 0;
    EXPECT_THROW(graph.AddFactor(factor), InvalidInput);

    factor.mKind = FactorKind::Prior;
    factor.mJ = 1;
    EXPECT_THROW(graph.AddFactor(factor), InvalidInput);
}

TEST(PoseGraph, ConsistentChainHasZeroResidual)
{
    PoseGraph graph(Pose2(0.0, 0.0, 0.0), DiagInfo(100.0, 100.0));
    graph.AddKeyframe(Pose2(2.0, 0.5, 0.3), DiagInfo(50.0, 50.0));
    graph.Solve();

    ExpectPoseNear(Pose2(0.0, 0.0, 0.0), graph.Node(0).mEstimate, 1.0e-12);
    ExpectPoseNear(Pose2(2.0, 0.5, 0.3), graph.Node(1).mEstimate, 1.0e-12);
}

/* Chain marginal with a motionless step: covariances add axis by axis.
 * With a forward step the heading uncertainty leaks into the cross-track
 * axis through the lever arm, which the second block checks. */
TEST(PoseGraph, TwoNodeChainMarginal)
{
    PoseGraph still(Pose2(0.0, 0.0, 0.0), DiagInfo(100.0, 100.0));
    still.AddKeyframe(Pose2(0.0, 0.0, 0.0), DiagInfo(50.0, 50.0));
    still.Solve();
    const Mat3 covStill = still.MarginalCovariance(1).mCov;
    EXPECT_NEAR(0.03, covStill(0, 0), 1.0e-9);
    EXPECT_NEAR(0.03, covStill(1, 1), 1.0e-9);
    EXPECT_NEAR(0.03, covStill(2, 2), 1.0e-9);

    PoseGraph forward(Pose2(0.0, 0.0, 0.0), DiagInfo(100.0, 100.0));
    forward.AddKeyframe(Pose2(1.0, 0.0, 0.0), DiagInfo(50.0, 50.0));
    forward.Solve();
    const Mat3 covForward = forward.MarginalCovariance(1).mCov;
    EXPECT_NEAR(0.03, covForward(0, 0), 1.0e-9);
    EXPECT_NEAR(0.04, covForward(1, 1), 1.0e-9);
    EXPECT_NEAR(0.01, covForward(1, 2), 1.0e-9);
    EXPECT_NEAR(0.03, covForward(2, 2), 1.0e-9);
}

TEST(PoseGraph, SquareLoopConvergesFromPerturbedInit)
{
    const std::vector<Pose2> truth = {
        Pose2(0.0, 0.0, 0.0), Pose2(10.0, 0.0, kPi / 2.0),
        Pose2(10.0, 10.0, kPi), Pose2(0.0, 10.0, -kPi / 2.0)};

    PoseGraph graph(truth[0], DiagInfo(100.0, 100.0));
    for (int k = 1; k < 4; ++k)
        graph.AddKeyframe(Between(truth[static_cast<size_t>(k - 1)],
                                  truth[static_cast<size_t>(k)]),
                          DiagInfo(50.0, 50.0));

    Factor closure;
    closure.mKind = FactorKind::LoopClosure;
    closure.mI = 3;
    closure.mJ = 0;
    closure.mMeasurement = Between(truth[3], truth[0]);
    closure.mInfo = DiagInfo(50.0, 50.0);
    graph.AddFactor(closure);

    graph.SetEstimate(1, Pose2(10.3, -0.25, kPi / 2.0 + 0.08));
    graph.SetEstimate(2, Pose2(9.8, 10.3, kPi - 0.1));
    graph.SetEstimate(3, Pose2(0.25, 10.2, -kPi / 2.0 + 0.12));

    graph.Solve();
    for (int k = 0; k < 4; ++k)
        ExpectPoseNear(truth[static_cast<size_t>(k)],
                       graph.Node(k).mEstimate, 1.0e-6);
}

TEST(PoseGraph, ResolveIsIdempotent)
{
    auto rng = MakeRng(11u);
    PoseGraph graph = RandomChainGraph(rng, 12, 3);
    graph.Solve();

    std::vector<Pose2> converged;
    for (int id = 0; id < graph.NodeCount(); ++id)
        converged.push_back(graph.Node(id).mEstimate);

    graph.Solve();
    for (int id = 0; id < graph.NodeCount(); ++id)
        ExpectPoseNear(converged[static_cast<size_t>(id)],
                       graph.Node(id).mEstimate, 1.0e-12);
}

/* The analytic Jacobians agree with central differences of the residual */
TEST(PoseGraph, OracleJacobiansMatchNumericDifferences)
{
    auto rng = MakeRng(17u);
    std::uniform_real_distribution<double> coord(-10.0, 10.0);
    std::uniform_real_distribution<double> heading(-2.5, 2.5);
    std::uniform_real_distribution<double> nudge(-0.1, 0.1);
    const double eps = 1.0e-6;

    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Pose2> states = {
            Pose2(coord(rng), coord(rng), heading(rng)),
            Pose2(coord(rng), coord(rng), heading(rng))};
        Factor factor;
        factor.mI = 0;
        factor.mJ = 1;
        factor.mMeasurement = Compose(Between(states[0], states[1]),
                                      Pose2(nudge(rng), nudge(rng), nudge(rng)));

        Mat3 jacI;
        Mat3 jacJ;
        OracleJacobians(factor, states, jacI, jacJ);

        for (int node = 0; node < 2; ++node) {
            for (int axis = 0; axis < 3; ++axis) {
                std::vector<Pose2> plus = states;
                std::vector<Pose2> minus = states;
                double* pp = axis == 0 ? &plus[static_cast<size_t>(node)].mX :
                             axis == 1 ? &plus[static_cast<size_t>(node)].mY :
                                         &plus[static_cast<size_t>(node)].mPsi;
                double* pm = axis == 0 ? &minus[static_cast<size_t>(node)].mX :
                             axis == 1 ? &minus[static_cast<size_t>(node)].mY :
                                         &minus[static_cast<size_t>(node)].mPsi;
                *pp += eps;
                *pm -= eps;
                const Vec3 diff = (OracleResidual(factor, plus) -
                                   OracleResidual(factor, minus)) / (2.0 * eps);
                const Mat3& jac = node == 0 ? jacI : jacJ;
                for (int row = 0; row < 3; ++row)
                    EXPECT_NEAR(jac(row, axis), diff(row), 1.0e-5);
            }
        }
    }
}

TEST(PoseGraph, MarginalsMatchDenseInverse)
{
    auto rng = MakeRng(23u);
    std::uniform_int_distribution<int> size(2, 20);

    for (int trial = 0; trial < 10; ++trial) {
        const int nodeCount = size(rng);
        PoseGraph graph = RandomChainGraph(rng, nodeCount, nodeCount / 4);
        graph.Solve();

        const Eigen::MatrixXd dense = DenseHessian(graph).inverse();
        for (int id = 0; id < graph.NodeCount(); ++id) {
            const Mat3 cov = graph.MarginalCovariance(id).mCov;
            const Mat3 expected = dense.block<3, 3>(3 * id, 3 * id);
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c)
                    EXPECT_NEAR(expected(r, c), cov(r, c), 1.0e-8);
        }
    }
}

/* Adding a loop closure never inflates any marginal */
TEST(PoseGraph, ClosureShrinksEveryMarginal)
{
    PoseGraph graph(Pose2(0.0, 0.0, 0.0), DiagInfo(100.0, 100.0));
    for (int k = 0; k < 9; ++k)
        graph.AddKeyframe(Pose2(2.0, 0.1, 0.05), DiagInfo(25.0, 40.0));
    graph.Solve();

    std::vector<double> before;
    for (int id = 0; id < graph.NodeCount(); ++id)
        before.push_back(std::log(graph.MarginalCovariance(id).mCov.determinant()));

    Factor closure;
    closure.mKind = FactorKind::LoopClosure;
    closure.mI = 0;
    closure.mJ = 9;
    closure.mMeasurement = Between(graph.Node(0).mEstimate,
                                   graph.Node(9).mEstimate);
    closure.mInfo = DiagInfo(100.0, 100.0);
    graph.AddFactor(closure);
    graph.Solve();

    for (int id = 0; id < graph.NodeCount(); ++id) {
        const double after =
            std::log(graph.MarginalCovariance(id).mCov.determinant());
        EXPECT_LE(after, before[static_cast<size_t>(id)] + 1.0e-12);
    }
}

TEST(MarginalsAfterClosure, EmptyExtensionMatchesLastMarginal)
{
    auto rng = MakeRng(31u);
    PoseGraph graph = RandomChainGraph(rng, 8, 2);
    graph.Solve();

    const Gaussian3 direct = graph.MarginalCovariance(graph.NodeCount() - 1);
    const ExtendedMarginals extended = graph.MarginalsAfterClosure({}, {});

    EXPECT_TRUE(extended.mPositionCovs.empty());
    ExpectPoseNear(direct.mMean, extended.mFinal.mMean, 1.0e-12);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            EXPECT_NEAR(direct.mCov(r, c), extended.mFinal.mCov(r, c), 1.0e-12);
}

TEST(MarginalsAfterClosure, OpenChainGrowsUncertainty)
{
    PoseGraph graph(Pose2(0.0, 0.0, 0.0), DiagInfo(100.0, 100.0));
    for (int k = 0; k < 4; ++k)
        graph.AddKeyframe(Pose2(2.0, 0.0, 0.0), DiagInfo(25.0, 40.0));
    graph.Solve();
    const int last = graph.NodeCount() - 1;
    const Mat3 current = graph.MarginalCovariance(last).mCov;

    std::vector<Pose2> hypPoses;
    std::vector<Factor> hypFactors;
    Pose2 cursor = graph.Node(last).mEstimate;
    for (int t = 0; t < 3; ++t) {
        cursor = Compose(cursor, Pose2(2.0, 0.0, 0.0));
        hypPoses.push_back(cursor);
        Factor odo;
        odo.mI = last + t;
        odo.mJ = last + t + 1;
        odo.mMeasurement = Pose2(2.0, 0.0, 0.0);
        odo.mInfo = DiagInfo(25.0, 40.0);
        hypFactors.push_back(odo);
    }

    const ExtendedMarginals extended =
        graph.MarginalsAfterClosure(hypPoses, hypFactors);
    ASSERT_EQ(3u, extended.mPositionCovs.size());

    const Mat3 grown = extended.mFinal.mCov;
    const Eigen::SelfAdjointEigenSolver<Mat3> eigen(grown - current);
    EXPECT_GE(eigen.eigenvalues()(0), -1.0e-12);
    EXPECT_GT(std::log(grown.determinant()),
              std::log(current.determinant()));

    /* Positional uncertainty is monotone along the open chain */
    double previous = current.topLeftCorner<2, 2>().determinant();
    for (const Mat2& cov : extended.mPositionCovs) {
        EXPECT_GE(cov.determinant(), previous - 1.0e-12);
        previous = cov.determinant();
    }
}

TEST(MarginalsAfterClosure, PredictedClosureShrinksFinalCovariance)
{
    PoseGraph graph(Pose2(0.0, 0.0, 0.0), DiagInfo(100.0, 100.0));
    for (int k = 0; k < 5; ++k)
        graph.AddKeyframe(Pose2(2.0, 0.0, 0.0), DiagInfo(25.0, 40.0));
    graph.Solve();
    const int last = graph.NodeCount() - 1;

    /* Hypothetical return to the prior node */
    std::vector<Pose2> hypPoses;
    std::vector<Factor> hypFactors;
    Pose2 cursor = graph.Node(last).mEstimate;
    for (int t = 0; t < 5; ++t) {
        cursor = Compose(cursor, Pose2(-2.0, 0.0, 0.0));
        hypPoses.push_back(cursor);
        Factor odo;
        odo.mI = last + t;
        odo.mJ = last + t + 1;
        odo.mMeasurement = Pose2(-2.0, 0.0, 0.0);
        odo.mInfo = DiagInfo(25.0, 40.0);
        hypFactors.push_back(odo);
    }

    const ExtendedMarginals open =
        graph.MarginalsAfterClosure(hypPoses, hypFactors);

    Factor closure;
    closure.mKind = FactorKind::LoopClosure;
    closure.mI = 0;
    closure.mJ = last + 5;
    closure.mMeasurement = Between(graph.Node(0).mEstimate, cursor);
    closure.mInfo = DiagInfo(100.0, 100.0);
    hypFactors.push_back(closure);

    const ExtendedMarginals closed =
        graph.MarginalsAfterClosure(hypPoses, hypFactors);

    const double openLogDet =
        std::log(open.mFinal.PositionCov().determinant());
    const double closedLogDet =
        std::log(closed.mFinal.PositionCov().determinant());
    EXPECT_LT(closedLogDet, openLogDet);
}

TEST(MarginalsAfterClosure, UnconstrainedHypotheticalNodeThrows)
{
    PoseGraph graph(Pose2(0.0, 0.0, 0.0), DiagInfo(100.0, 100.0));
    graph.AddKeyframe(Pose2(1.0, 0.0, 0.0), DiagInfo(50.0, 50.0));
    graph.Solve();

    EXPECT_THROW(graph.MarginalsAfterClosure({Pose2(3.0, 0.0, 0.0)}, {}),
                 SingularSystem);
}

TEST(MarginalsAfterClosure, LeavesLiveGraphUntouched)
{
    auto rng = MakeRng(41u);
    PoseGraph graph = RandomChainGraph(rng, 10, 2);
    graph.Solve();

    const std::string before = DumpToString(graph);
    std::uniform_real_distribution<double> forward(0.5, 2.0);
    std::uniform_real_distribution<double> turn(-0.3, 0.3);

    for (int trial = 0; trial < 20; ++trial) {
        const int last = graph.NodeCount() - 1;
        std::vector<Pose2> hypPoses;
        std::vector<Factor> hypFactors;
        Pose2 cursor = graph.Node(last).mEstimate;
        const int steps = 1 + trial % 4;
        for (int t = 0; t < steps; ++t) {
            const Pose2 rel(forward(rng), 0.0, turn(rng));
            cursor = Compose(cursor, rel);
            hypPoses.push_back(cursor);
            Factor odo;
            odo.mI = last + t;
            odo.mJ = last + t + 1;
            odo.mMeasurement = rel;
            odo.mInfo = DiagInfo(25.0, 40.0);
            hypFactors.push_back(odo);
        }
        graph.MarginalsAfterClosure(hypPoses, hypFactors);
    }

    EXPECT_TRUE(graph.Solved());
    EXPECT_EQ(before, DumpToString(graph));
}

TEST(PoseGraph, DumpWritesNodeAndFactorRecords)
{
    PoseGraph graph(Pose2(0.0, 0.0, 0.0), DiagInfo(100.0, 100.0));
    graph.AddKeyframe(Pose2(1.0, 0.0, 0.0), DiagInfo(50.0, 50.0));

    const std::string text = DumpToString(graph);
    EXPECT_EQ(0u, text.find("NODE 0 "));
    EXPECT_NE(std::string::npos, text.find("NODE 1 "));
    EXPECT_NE(std::string::npos, text.find("FACTOR prior 0 -1 "));
    EXPECT_NE(std::string::npos, text.find("FACTOR odometry 0 1 "));

    size_t factorLines = 0;
    size_t pos = 0;
    while ((pos = text.find("FACTOR ", pos)) != std::string::npos) {
        ++factorLines;
        ++pos;
    }
    EXPECT_EQ(2u, factorLines);
}

/* ---- scan alignment ---- */

namespace {

/* Two perpendicular walls sampled in the body frame of a pose at the
 * origin: a corner pins both translation axes */
std::vector<Vec2> CornerPoints()
{
    std::vector<Vec2> points;
    for (double y = -6.0; y <= 6.0; y += 0.25)
        points.emplace_back(6.0, y);
    for (double x = -6.0; x <= 6.0; x += 0.25)
        points.emplace_back(x, 6.0);
    return points;
}

} /* namespace */

TEST(AlignScans, SelfMatchIsIdentity)
{
    const std::vector<Vec2> points = CornerPoints();
    const auto alignment = AlignScans(points, points, Pose2(), {});
    ASSERT_TRUE(alignment.has_value());
    ExpectPoseNear(Pose2(0.0, 0.0, 0.0), alignment->mRelative, 1.0e-9);
    EXPECT_NEAR(0.0, alignment->mRms, 1.0e-9);
    EXPECT_EQ(static_cast<int>(points.size()), alignment->mMatchCount);
}

TEST(AlignScans, RecoversKnownOffset)
{
    const std::vector<Vec2> reference = CornerPoints();
    std::vector<Vec2> query;
    for (const Vec2& point : reference)
        query.emplace_back(point.x() - 0.5, point.y());

    const auto alignment = AlignScans(reference, query, Pose2(), {});
    ASSERT_TRUE(alignment.has_value());
    EXPECT_NEAR(0.5, alignment->mRelative.mX, 0.05);
    EXPECT_NEAR(0.0, alignment->mRelative.mY, 0.05);
    EXPECT_NEAR(0.0, alignment->mRelative.mPsi, 0.02);
}

TEST(AlignScans, RejectsSingleWallGeometry)
{
    std::vector<Vec2> wall;
    for (double x = -8.0; x <= 8.0; x += 0.25)
        wall.emplace_back(x, 5.0);

    EXPECT_FALSE(AlignScans(wall, wall, Pose2(), {}).has_value());
}

TEST(AlignScans, RejectsTooFewPoints)
{
    const std::vector<Vec2> sparse = {Vec2(1.0, 0.0), Vec2(2.0, 0.0),
                                      Vec2(3.0, 0.0)};
    EXPECT_FALSE(AlignScans(sparse, sparse, Pose2(), {}).has_value());
}

/* ---- loop-closure search ---- */

namespace {

SensorModel NoiselessSensor()
{
    SensorModel model;
    model.mRangeStd = 0.0;
    model.mBearingStd = 0.0;
    return model;
}

} /* namespace */

TEST(TryLoopClosure, FindsRevisitAfterLoop)
{
    const World world = BoxWorld(10.0, 2.0);
    const SensorModel sensor = NoiselessSensor();

    /* Regular 12-gon returns exactly to the start pose */
    PoseGraph graph(Pose2(0.0, 0.0, 0.0), DiagInfo(100.0, 100.0));
    std::vector<Pose2> truth = {Pose2(0.0, 0.0, 0.0)};
    for (int k = 0; k < 12; ++k) {
        const Pose2 rel(1.0, 0.0, kPi / 6.0);
        graph.AddKeyframe(rel, DiagInfo(50.0, 50.0));
        truth.push_back(Compose(truth.back(), rel));
    }
    graph.Solve();

    std::vector<KeyframeScan> history;
    history.push_back({0, ScanPointsLocal(CastScan(world, truth[0], sensor, 1u))});

    const Scan current = CastScan(world, truth[12], sensor, 2u);
    const auto factor = TryLoopClosure(graph, current, history, {});

    ASSERT_TRUE(factor.has_value());
    EXPECT_EQ(FactorKind::LoopClosure, factor->mKind);
    EXPECT_EQ(0, factor->mI);
    EXPECT_EQ(12, factor->mJ);
    ExpectPoseNear(Pose2(0.0, 0.0, 0.0), factor->mMeasurement, 1.0e-6);

    graph.AddFactor(*factor);
    graph.Solve();
    ExpectPoseNear(truth[12], graph.Node(12).mEstimate, 1.0e-6);
}

TEST(TryLoopClosure, NoCandidateWithinRadius)
{
    const World world = BoxWorld(40.0, 2.0);
    const SensorModel sensor = NoiselessSensor();

    PoseGraph graph(Pose2(-30.0, 0.0, 0.0), DiagInfo(100.0, 100.0));
    std::vector<Pose2> truth = {Pose2(-30.0, 0.0, 0.0)};
    for (int k = 0; k < 15; ++k) {
        const Pose2 rel(2.0, 0.0, 0.0);
        graph.AddKeyframe(rel, DiagInfo(50.0, 50.0));
        truth.push_back(Compose(truth.back(), rel));
    }
    graph.Solve();

    std::vector<KeyframeScan> history;
    history.push_back({0, ScanPointsLocal(CastScan(world, truth[0], sensor, 1u))});

    const Scan current = CastScan(world, truth[15], sensor, 2u);
    EXPECT_FALSE(TryLoopClosure(graph, current, history, {}).has_value());
}

TEST(TryLoopClosure, RecoversDriftedRevisitOffset)
{
    const World world = BoxWorld(10.0, 2.0);
    const SensorModel sensor = NoiselessSensor();

    /* The graph believes the vessel returned to (0.3, -0.2); in truth it
     * sits at (0.5, 0). The closure must recover the true offset. */
    PoseGraph graph(Pose2(0.0, 0.0, 0.0), DiagInfo(100.0, 100.0));
    for (int k = 0; k < 4; ++k)
        graph.AddKeyframe(Pose2(2.0, 0.0, 0.0), DiagInfo(50.0, 50.0));
    for (int k = 0; k < 4; ++k)
        graph.AddKeyframe(Pose2(-2.0, 0.0, 0.0), DiagInfo(50.0, 50.0));
    graph.AddKeyframe(Pose2(0.15, -0.1, 0.0), DiagInfo(50.0, 50.0));
    graph.AddKeyframe(Pose2(0.15, -0.1, 0.0), DiagInfo(50.0, 50.0));
    graph.Solve();
    ASSERT_EQ(11, graph.NodeCount());

    std::vector<KeyframeScan> history;
    history.push_back({0, ScanPointsLocal(
        CastScan(world, Pose2(0.0, 0.0, 0.0), sensor, 1u))});

    const Scan current = CastScan(world, Pose2(0.5, 0.0, 0.0), sensor, 2u);
    const auto factor = TryLoopClosure(graph, current, history, {});

    ASSERT_TRUE(factor.has_value());
    EXPECT_EQ(0, factor->mI);
    EXPECT_EQ(10, factor->mJ);
    EXPECT_NEAR(0.5, factor->mMeasurement.mX, 0.05);
    EXPECT_NEAR(0.0, factor->mMeasurement.mY, 0.05);
    EXPECT_NEAR(0.0, factor->mMeasurement.mPsi, 0.02);
}

TEST(TryLoopClosure, RequiresSolvedGraph)
{
    PoseGraph graph(Pose2(0.0, 0.0, 0.0), DiagInfo(100.0, 100.0));
    EXPECT_THROW(TryLoopClosure(graph, Scan{}, {}, {}), NotSolved);
}
