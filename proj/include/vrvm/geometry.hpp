/* geometry.hpp */

#ifndef VRVM_GEOMETRY_HPP
#define VRVM_GEOMETRY_HPP

#include <cmath>

#include <Eigen/Core>

#include "vrvm/errors.hpp"

namespace vrvm {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/* Wrap an angle to the half-open interval (-pi, pi] */
inline double WrapAngle(const double angle)
{
    if (!std::isfinite(angle))
        throw InvalidInput("WrapAngle: angle is not finite");

    /* IEEE remainder lands in [-pi, pi]; fold the open end */
    double wrapped = std::remainder(angle, 2.0 * kPi);
    if (wrapped <= -kPi)
        wrapped += 2.0 * kPi;

    return wrapped;
}

/* Planar pose (position and heading, heading kept in (-pi, pi]) */
struct Pose2
{
    Pose2() : mX(0.0), mY(0.0), mPsi(0.0) { }
    Pose2(const double x, const double y, const double psi) :
        mX(x), mY(y), mPsi(WrapAngle(psi)) { }

    Vec2 Position() const { return Vec2(this->mX, this->mY); }

    double mX;
    double mY;
    double mPsi;
};

inline Mat2 RotationOf(const double psi)
{
    const double c = std::cos(psi);
    const double s = std::sin(psi);
    Mat2 rot;
    rot << c, -s,
           s,  c;
    return rot;
}

/* Compose two poses: the frame of `rel` is attached to `base` */
inline Pose2 Compose(const Pose2& base, const Pose2& rel)
{
    const double c = std::cos(base.mPsi);
    const double s = std::sin(base.mPsi);
    return Pose2(base.mX + c * rel.mX - s * rel.mY,
                 base.mY + s * rel.mX + c * rel.mY,
                 base.mPsi + rel.mPsi);
}

/* Inverse pose so that Compose(Inverse(p), p) is the identity */
inline Pose2 Inverse(const Pose2& pose)
{
    const double c = std::cos(pose.mPsi);
    const double s = std::sin(pose.mPsi);
    return Pose2(-(c * pose.mX + s * pose.mY),
                 -(-s * pose.mX + c * pose.mY),
                 -pose.mPsi);
}

/* Express `target` in the frame of `base` (relative pose) */
inline Pose2 Between(const Pose2& base, const Pose2& target)
{
    return Compose(Inverse(base), target);
}

/* Jacobians of Compose(base, rel) with respect to both arguments,
 * used when chaining odometry increments and their covariances */
inline void ComposeJacobians(const Pose2& base, const Pose2& rel,
                             Mat3& jacBase, Mat3& jacRel)
{
    const double c = std::cos(base.mPsi);
    const double s = std::sin(base.mPsi);

    jacBase << 1.0, 0.0, -s * rel.mX - c * rel.mY,
               0.0, 1.0,  c * rel.mX - s * rel.mY,
               0.0, 0.0,  1.0;
    jacRel << c,  -s,  0.0,
              s,   c,  0.0,
              0.0, 0.0, 1.0;
}

inline double Distance(const Pose2& a, const Pose2& b)
{
    return std::hypot(a.mX - b.mX, a.mY - b.mY);
}

} /* namespace vrvm */

#endif /* VRVM_GEOMETRY_HPP */
