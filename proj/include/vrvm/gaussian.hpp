/* gaussian.hpp */

#ifndef VRVM_GAUSSIAN_HPP
#define VRVM_GAUSSIAN_HPP

#include <cmath>

#include <Eigen/Core>

#include "vrvm/errors.hpp"
#include "vrvm/geometry.hpp"

namespace vrvm {

/* Bivariate Gaussian kept in information form (landmark beliefs) */
struct Gaussian2
{
    Gaussian2() : mMean(Vec2::Zero()), mInfo(Mat2::Identity()) { }
    Gaussian2(const Vec2& mean, const Mat2& info) :
        mMean(mean), mInfo(info) { }

    Vec2 mMean;
    Mat2 mInfo;
};

/* Pose belief kept in covariance form (graph marginals) */
struct Gaussian3
{
    Gaussian3() : mMean(), mCov(Mat3::Zero()) { }
    Gaussian3(const Pose2& mean, const Mat3& cov) :
        mMean(mean), mCov(cov) { }

    /* Positional 2x2 block of the covariance */
    Mat2 PositionCov() const { return this->mCov.topLeftCorner<2, 2>(); }

    Pose2 mMean;
    Mat3 mCov;
};

namespace detail {

inline void CheckFinite2(const Mat2& m, const char* who)
{
    if (!m.allFinite())
        throw InvalidInput(std::string(who) + ": matrix is not finite");
}

inline void CheckSymmetric2(const Mat2& m, const char* who)
{
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (std::abs(m(0, 1) - m(1, 0)) > 1.0e-9 * scale)
        throw DegenerateMatrix(std::string(who) + ": matrix is not symmetric");
}

} /* namespace detail */

/* Log-determinant of a symmetric positive definite 2x2 matrix,
 * evaluated through the Cholesky factor for numerical stability */
inline double LogDet2(const Mat2& m)
{
    detail::CheckFinite2(m, "LogDet2");
    detail::CheckSymmetric2(m, "LogDet2");

    if (!(m(0, 0) > 0.0))
        throw DegenerateMatrix("LogDet2: matrix is not positive definite");

    const double l00 = std::sqrt(m(0, 0));
    const double l10 = m(1, 0) / l00;
    const double d11 = m(1, 1) - l10 * l10;
    if (!(d11 > 0.0))
        throw DegenerateMatrix("LogDet2: matrix is not positive definite");

    return 2.0 * (std::log(l00) + 0.5 * std::log(d11));
}

/* Closed-form inverse of a symmetric positive definite 2x2 matrix */
inline Mat2 Invert2(const Mat2& m)
{
    detail::CheckFinite2(m, "Invert2");
    detail::CheckSymmetric2(m, "Invert2");

    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    if (!(m(0, 0) > 0.0) || !(det > 1.0e-300))
        throw DegenerateMatrix("Invert2: matrix is numerically singular");

    Mat2 inv;
    inv <<  m(1, 1) / det, -m(0, 1) / det,
           -m(1, 0) / det,  m(0, 0) / det;
    return inv;
}

} /* namespace vrvm */

#endif /* VRVM_GAUSSIAN_HPP */
