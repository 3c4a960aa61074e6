/* errors.hpp */

#ifndef VRVM_ERRORS_HPP
#define VRVM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vrvm {

/* Base class for all errors raised by this library */
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/* Matrix is not symmetric positive definite (or numerically singular) */
class DegenerateMatrix final : public Error
{
public:
    using Error::Error;
};

/* Argument is non-finite or otherwise outside the documented domain */
class InvalidInput final : public Error
{
public:
    using Error::Error;
};

/* Motion command exceeds the configured actuator limits */
class CommandLimit final : public Error
{
public:
    using Error::Error;
};

/* Normal equations are singular (disconnected graph or missing prior) */
class SingularSystem final : public Error
{
public:
    using Error::Error;
};

/* Marginals were requested before a successful solve */
class NotSolved final : public Error
{
public:
    using Error::Error;
};

/* Grid cell index lies outside the map */
class OutOfBounds final : public Error
{
public:
    using Error::Error;
};

/* An aggregate was requested over an empty leaf set */
class EmptySet final : public Error
{
public:
    using Error::Error;
};

/* Sampling-based planner exhausted its iteration budget */
class PathNotFound final : public Error
{
public:
    using Error::Error;
};

/* Requested goal lies inside (inflated) occupied space */
class GoalInCollision final : public Error
{
public:
    using Error::Error;
};

/* Every candidate frontier failed to produce a feasible plan */
class NoFeasiblePlan final : public Error
{
public:
    using Error::Error;
};

} /* namespace vrvm */

#endif /* VRVM_ERRORS_HPP */
