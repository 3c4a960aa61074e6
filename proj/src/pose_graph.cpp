/* pose_graph.cpp */

#include "vrvm/pose_graph.hpp"

#include <deque>
#include <ostream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SparseCore>

namespace vrvm {

namespace {

void CheckSpd3(const Mat3& info, const char* who)
{
    if (!info.allFinite())
        throw DegenerateMatrix(std::string(who) + ": information matrix is not finite");

    const double scale = std::max(1.0, info.cwiseAbs().maxCoeff());
    if ((info - info.transpose()).cwiseAbs().maxCoeff() > 1.0e-9 * scale)
        throw DegenerateMatrix(std::string(who) + ": information matrix is not symmetric");

    const Eigen::LLT<Mat3> llt(info);
    if (llt.info() != Eigen::Success)
        throw DegenerateMatrix(std::string(who) + ": information matrix is not positive definite");
}

/* Residual of one factor and its Jacobian blocks with respect to the
 * endpoint states. For the prior the measurement is absolute and the
 * Jacobian is the identity; for binary factors the residual compares the
 * predicted relative pose of j in the frame of i with the measurement. */
void FactorResidual(const Factor& factor, const std::vector<PoseNode>& nodes,
                    Vec3& residual, Mat3& jacI, Mat3& jacJ)
{
    const Pose2& xi = nodes[static_cast<size_t>(factor.mI)].mEstimate;

    if (factor.mJ < 0) {
        residual << xi.mX - factor.mMeasurement.mX,
                    xi.mY - factor.mMeasurement.mY,
                    WrapAngle(xi.mPsi - factor.mMeasurement.mPsi);
        jacI.setIdentity();
        jacJ.setZero();
        return;
    }

    const Pose2& xj = nodes[static_cast<size_t>(factor.mJ)].mEstimate;
    const double c = std::cos(xi.mPsi);
    const double s = std::sin(xi.mPsi);
    const double dx = xj.mX - xi.mX;
    const double dy = xj.mY - xi.mY;

    residual << c * dx + s * dy - factor.mMeasurement.mX,
                -s * dx + c * dy - factor.mMeasurement.mY,
                WrapAngle(xj.mPsi - xi.mPsi - factor.mMeasurement.mPsi);

    jacI << -c, -s, -s * dx + c * dy,
             s, -c, -c * dx - s * dy,
             0.0, 0.0, -1.0;
    jacJ <<  c,  s, 0.0,
            -s,  c, 0.0,
             0.0, 0.0, 1.0;
}

double WeightedCost(const std::vector<PoseNode>& nodes,
                    const std::vector<Factor>& factors)
{
    double cost = 0.0;
    Vec3 residual;
    Mat3 jacI;
    Mat3 jacJ;
    for (const Factor& factor : factors) {
        FactorResidual(factor, nodes, residual, jacI, jacJ);
        cost += residual.dot(factor.mInfo * residual);
    }
    return cost;
}

void CheckConnected(const int nodeCount, const std::vector<Factor>& factors)
{
    std::vector<std::vector<int>> adjacency(static_cast<size_t>(nodeCount));
    for (const Factor& factor : factors) {
        if (factor.mJ < 0)
            continue;
        adjacency[static_cast<size_t>(factor.mI)].push_back(factor.mJ);
        adjacency[static_cast<size_t>(factor.mJ)].push_back(factor.mI);
    }

    std::vector<char> seen(static_cast<size_t>(nodeCount), 0);
    std::deque<int> frontier = {0};
    seen[0] = 1;
    int reached = 1;
    while (!frontier.empty()) {
        const int id = frontier.front();
        frontier.pop_front();
        for (const int next : adjacency[static_cast<size_t>(id)]) {
            if (seen[static_cast<size_t>(next)])
                continue;
            seen[static_cast<size_t>(next)] = 1;
            ++reached;
            frontier.push_back(next);
        }
    }

    if (reached != nodeCount)
        throw SingularSystem("Solve: graph is disconnected");
}

Eigen::SparseMatrix<double> AssembleHessian(const std::vector<PoseNode>& nodes,
                                            const std::vector<Factor>& factors,
                                            Eigen::VectorXd& gradient)
{
    const int dim = 3 * static_cast<int>(nodes.size());
    gradient = Eigen::VectorXd::Zero(dim);

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(factors.size() * 36);

    Vec3 residual;
    Mat3 jacI;
    Mat3 jacJ;
    const auto addBlock = [&triplets](const int row, const int col, const Mat3& block) {
        for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 3; ++s)
                triplets.emplace_back(row + r, col + s, block(r, s));
    };

    for (const Factor& factor : factors) {
        FactorResidual(factor, nodes, residual, jacI, jacJ);
        const Mat3 wI = jacI.transpose() * factor.mInfo;
        const int rowI = 3 * factor.mI;

        addBlock(rowI, rowI, wI * jacI);
        gradient.segment<3>(rowI) += wI * residual;

        if (factor.mJ >= 0) {
            const Mat3 wJ = jacJ.transpose() * factor.mInfo;
            const int rowJ = 3 * factor.mJ;
            addBlock(rowI, rowJ, wI * jacJ);
            addBlock(rowJ, rowI, wJ * jacI);
            addBlock(rowJ, rowJ, wJ * jacJ);
            gradient.segment<3>(rowJ) += wJ * residual;
        }
    }

    Eigen::SparseMatrix<double> hessian(dim, dim);
    hessian.setFromTriplets(triplets.begin(), triplets.end());
    return hessian;
}

void ApplyStep(const std::vector<PoseNode>& nodes, const Eigen::VectorXd& delta,
               std::vector<PoseNode>& out)
{
    out = nodes;
    for (size_t i = 0; i < nodes.size(); ++i) {
        const Pose2& pose = nodes[i].mEstimate;
        const auto step = delta.segment<3>(3 * static_cast<Eigen::Index>(i));
        out[i].mEstimate = Pose2(pose.mX + step(0), pose.mY + step(1),
                                 pose.mPsi + step(2));
    }
}

/* Gauss-Newton with step halving; the weighted residual never increases
 * across accepted iterations. Returns the Hessian at the final estimates. */
Eigen::SparseMatrix<double> Optimize(std::vector<PoseNode>& nodes,
                                     const std::vector<Factor>& factors)
{
    CheckConnected(static_cast<int>(nodes.size()), factors);

    constexpr int kMaxIterations = 50;
    constexpr int kMaxHalvings = 30;
    constexpr double kUpdateTolerance = 1.0e-8;

    double cost = WeightedCost(nodes, factors);
    Eigen::VectorXd gradient;
    std::vector<PoseNode> trial;

    for (int iteration = 0; iteration < kMaxIterations; ++iteration) {
        const Eigen::SparseMatrix<double> hessian =
            AssembleHessian(nodes, factors, gradient);

        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(hessian);
        if (ldlt.info() != Eigen::Success)
            throw SingularSystem("Solve: normal equations are singular");

        const Eigen::VectorXd delta = ldlt.solve(-gradient);
        if (!delta.allFinite())
            throw SingularSystem("Solve: normal equations are singular");

        /* Converged: a sub-tolerance update is never applied, so re-solving
         * a converged graph leaves the estimates untouched */
        if (delta.norm() < kUpdateTolerance)
            break;

        double scale = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < kMaxHalvings; ++halving) {
            ApplyStep(nodes, scale * delta, trial);
            const double trialCost = WeightedCost(trial, factors);
            if (trialCost <= cost) {
                nodes.swap(trial);
                cost = trialCost;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }

        if (!accepted)
            break;
    }

    return AssembleHessian(nodes, factors, gradient);
}

} /* namespace */

const char* FactorKindName(const FactorKind kind)
{
    switch (kind) {
    case FactorKind::Prior:       return "prior";
    case FactorKind::Odometry:    return "odometry";
    case FactorKind::ScanMatch:   return "scan_match";
    case FactorKind::LoopClosure: return "loop_closure";
    }
    return "unknown";
}

PoseGraph::PoseGraph(const Pose2& prior, const Mat3& priorInfo, const int stamp)
{
    CheckSpd3(priorInfo, "PoseGraph");
    this->mNodes.push_back({0, prior, stamp});
    this->mFactors.push_back({FactorKind::Prior, 0, -1, prior, priorInfo});
}

int PoseGraph::AddKeyframe(const Pose2& odometry, const Mat3& odometryInfo,
                           const int stamp)
{
    CheckSpd3(odometryInfo, "AddKeyframe");

    const int id = this->NodeCount();
    const Pose2 estimate = Compose(this->mNodes.back().mEstimate, odometry);
    this->mNodes.push_back({id, estimate, stamp});
    this->mFactors.push_back({FactorKind::Odometry, id - 1, id, odometry,
                              odometryInfo});

    this->mSolved = false;
    this->mMarginalCache.clear();
    this->mLdlt.reset();
    return id;
}

void PoseGraph::AddFactor(const Factor& factor)
{
    if (factor.mKind == FactorKind::Prior)
        throw InvalidInput("AddFactor: the graph carries exactly one prior");
    if (factor.mI < 0 || factor.mI >= this->NodeCount() ||
        factor.mJ < 0 || factor.mJ >= this->NodeCount() ||
        factor.mI == factor.mJ)
        throw InvalidInput("AddFactor: endpoints must be distinct existing nodes");
    CheckSpd3(factor.mInfo, "AddFactor");

    this->mFactors.push_back(factor);
    this->mSolved = false;
    this->mMarginalCache.clear();
    this->mLdlt.reset();
}

void PoseGraph::SetEstimate(const int id, const Pose2& estimate)
{
    if (id < 0 || id >= this->NodeCount())
        throw InvalidInput("SetEstimate: id out of range");

    this->mNodes[static_cast<size_t>(id)].mEstimate = estimate;
    this->mSolved = false;
    this->mMarginalCache.clear();
    this->mLdlt.reset();
}

const PoseNode& PoseGraph::Node(const int id) const
{
    if (id < 0 || id >= this->NodeCount())
        throw InvalidInput("Node: id out of range");
    return this->mNodes[static_cast<size_t>(id)];
}

void PoseGraph::Solve()
{
    this->mHessian = Optimize(this->mNodes, this->mFactors);
    this->mSolved = true;
    this->mLdlt.reset();
    this->mMarginalCache.clear();
    this->mMarginalCache.resize(this->mNodes.size());
}

void PoseGraph::EnsureFactorization() const
{
    if (this->mLdlt)
        return;
    auto ldlt = std::make_unique<Ldlt>(this->mHessian);
    if (ldlt->info() != Eigen::Success)
        throw SingularSystem("MarginalCovariance: normal equations are singular");
    this->mLdlt = std::move(ldlt);
}

Gaussian3 PoseGraph::MarginalCovariance(const int id) const
{
    if (!this->mSolved)
        throw NotSolved("MarginalCovariance: graph has not been solved");
    if (id < 0 || id >= this->NodeCount())
        throw InvalidInput("MarginalCovariance: id out of range");

    auto& slot = this->mMarginalCache[static_cast<size_t>(id)];
    if (slot)
        return *slot;

    this->EnsureFactorization();

    const int dim = 3 * this->NodeCount();
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(dim, 3);
    rhs.block<3, 3>(3 * id, 0).setIdentity();
    const Eigen::MatrixXd columns = this->mLdlt->solve(rhs);

    Mat3 cov = columns.block<3, 3>(3 * id, 0);
    cov = 0.5 * (cov + cov.transpose()).eval();

    slot = std::make_unique<Gaussian3>(
        this->mNodes[static_cast<size_t>(id)].mEstimate, cov);
    return *slot;
}

ExtendedMarginals PoseGraph::MarginalsAfterClosure(
    const std::vector<Pose2>& hypPoses,
    const std::vector<Factor>& hypFactors) const
{
    if (!this->mSolved)
        throw NotSolved("MarginalsAfterClosure: graph has not been solved");

    const int baseCount = this->NodeCount();
    const int hypCount = static_cast<int>(hypPoses.size());
    const int total = baseCount + hypCount;

    for (const Factor& factor : hypFactors) {
        if (factor.mKind == FactorKind::Prior)
            throw InvalidInput("MarginalsAfterClosure: hypothetical priors are not allowed");
        if (factor.mI < 0 || factor.mI >= total ||
            factor.mJ < 0 || factor.mJ >= total ||
            factor.mI == factor.mJ)
            throw InvalidInput("MarginalsAfterClosure: factor endpoints out of range");
        CheckSpd3(factor.mInfo, "MarginalsAfterClosure");
    }

    std::vector<PoseNode> nodes = this->mNodes;
    nodes.reserve(static_cast<size_t>(total));
    const int lastStamp = this->mNodes.back().mStamp;
    for (int t = 0; t < hypCount; ++t)
        nodes.push_back({baseCount + t, hypPoses[static_cast<size_t>(t)], lastStamp});

    std::vector<Factor> factors = this->mFactors;
    factors.insert(factors.end(), hypFactors.begin(), hypFactors.end());

    const Eigen::SparseMatrix<double> hessian = Optimize(nodes, factors);
    Ldlt ldlt(hessian);
    if (ldlt.info() != Eigen::Success)
        throw SingularSystem("MarginalsAfterClosure: normal equations are singular");

    const int finalId = total - 1;
    const int dim = 3 * total;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(dim, 2 * hypCount + 3);
    for (int t = 0; t < hypCount; ++t) {
        rhs(3 * (baseCount + t), 2 * t) = 1.0;
        rhs(3 * (baseCount + t) + 1, 2 * t + 1) = 1.0;
    }
    rhs.block<3, 3>(3 * finalId, 2 * hypCount).setIdentity();
    const Eigen::MatrixXd columns = ldlt.solve(rhs);

    ExtendedMarginals result;
    result.mPositionCovs.reserve(static_cast<size_t>(hypCount));
    for (int t = 0; t < hypCount; ++t) {
        Mat2 cov = columns.block<2, 2>(3 * (baseCount + t), 2 * t);
        cov = 0.5 * (cov + cov.transpose()).eval();
        result.mPositionCovs.push_back(cov);
    }

    Mat3 finalCov = columns.block<3, 3>(3 * finalId, 2 * hypCount);
    finalCov = 0.5 * (finalCov + finalCov.transpose()).eval();
    result.mFinal = Gaussian3(nodes[static_cast<size_t>(finalId)].mEstimate,
                              finalCov);
    return result;
}

void PoseGraph::Dump(std::ostream& out) const
{
    const auto precision = out.precision(17);
    for (const PoseNode& node : this->mNodes)
        out << "NODE " << node.mId << ' ' << node.mEstimate.mX << ' '
            << node.mEstimate.mY << ' ' << node.mEstimate.mPsi << '\n';

    for (const Factor& factor : this->mFactors) {
        out << "FACTOR " << FactorKindName(factor.mKind) << ' ' << factor.mI
            << ' ' << factor.mJ << ' ' << factor.mMeasurement.mX << ' '
            << factor.mMeasurement.mY << ' ' << factor.mMeasurement.mPsi;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                out << ' ' << factor.mInfo(r, c);
        out << '\n';
    }
    out.precision(precision);
}

} /* namespace vrvm */
