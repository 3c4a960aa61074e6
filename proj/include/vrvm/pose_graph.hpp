/* pose_graph.hpp */

#ifndef VRVM_POSE_GRAPH_HPP
#define VRVM_POSE_GRAPH_HPP

#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "vrvm/errors.hpp"
#include "vrvm/gaussian.hpp"
#include "vrvm/geometry.hpp"

namespace vrvm {

enum class FactorKind { Prior, Odometry, ScanMatch, LoopClosure };

const char* FactorKindName(const FactorKind kind);

/* One measurement constraint. Unary factors (the prior) use mJ == -1 and an
 * absolute measurement; binary factors store the pose of node j expressed in
 * the frame of node i. */
struct Factor
{
    FactorKind mKind = FactorKind::Odometry;
    int mI = -1;
    int mJ = -1;
    Pose2 mMeasurement;
    Mat3 mInfo = Mat3::Identity();
};

struct PoseNode
{
    int mId = -1;
    Pose2 mEstimate;
    int mStamp = 0;
};

/* Result of evaluating marginals on a hypothetically extended graph */
struct ExtendedMarginals
{
    Gaussian3 mFinal;
    std::vector<Mat2> mPositionCovs;   /* one per hypothetical node, in order */
};

/* Batch 2D pose graph. Nodes are appended through AddKeyframe, loop-closure
 * constraints through AddFactor, and Solve runs Gauss-Newton over the whole
 * trajectory. Construction plants node 0 together with its prior. */
class PoseGraph
{
public:
    PoseGraph(const Pose2& prior, const Mat3& priorInfo, const int stamp = 0);

    /* Appends a node at the composition of the last estimate with the
     * odometry measurement, constrained by a new odometry factor */
    int AddKeyframe(const Pose2& odometry, const Mat3& odometryInfo,
                    const int stamp = 0);

    /* Adds a binary constraint between two existing nodes */
    void AddFactor(const Factor& factor);

    /* Overrides one node's linearization point (re-initialization) */
    void SetEstimate(const int id, const Pose2& estimate);

    int NodeCount() const { return static_cast<int>(this->mNodes.size()); }
    const PoseNode& Node(const int id) const;
    const std::vector<Factor>& Factors() const { return this->mFactors; }
    bool Solved() const { return this->mSolved; }

    /* Gauss-Newton over all nodes; the weighted residual never increases
     * across accepted iterations */
    void Solve();

    /* Diagonal covariance block of one node at the current solution */
    Gaussian3 MarginalCovariance(const int id) const;

    /* Marginals of the graph extended by hypothetical nodes and factors,
     * solved on a scratch copy; the live graph is untouched. Hypothetical
     * nodes take ids NodeCount()..NodeCount()+n-1. With an empty extension
     * this reduces to MarginalCovariance at the last node. */
    ExtendedMarginals MarginalsAfterClosure(
        const std::vector<Pose2>& hypPoses,
        const std::vector<Factor>& hypFactors) const;

    /* Line-oriented text dump (NODE and FACTOR records) */
    void Dump(std::ostream& out) const;

private:
    using SparseMat = Eigen::SparseMatrix<double>;
    using Ldlt = Eigen::SimplicialLDLT<SparseMat>;

    void EnsureFactorization() const;

    std::vector<PoseNode> mNodes;
    std::vector<Factor> mFactors;
    bool mSolved = false;

    SparseMat mHessian;
    mutable std::unique_ptr<Ldlt> mLdlt;
    mutable std::vector<std::unique_ptr<Gaussian3>> mMarginalCache;
};

} /* namespace vrvm */

#endif /* VRVM_POSE_GRAPH_HPP */
