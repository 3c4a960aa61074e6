/* world.hpp */

#ifndef VRVM_WORLD_HPP
#define VRVM_WORLD_HPP

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "vrvm/geometry.hpp"

namespace vrvm {

/* Convex obstacle stored with counter-clockwise vertex order */
class Polygon final
{
public:
    explicit Polygon(std::vector<Vec2> vertices);

    const std::vector<Vec2>& Vertices() const { return this->mVertices; }
    const Vec2& Centroid() const { return this->mCentroid; }
    double BoundingRadius() const { return this->mBoundingRadius; }

    /* Point containment, closed (boundary points are inside) */
    bool Contains(const Vec2& point) const;

    /* Distance from a point to the polygon boundary (0 inside is not
     * implied; this is the distance to the nearest edge segment) */
    double BoundaryDistance(const Vec2& point) const;

    /* Smallest positive ray parameter hitting any edge, or +inf */
    double RayIntersect(const Vec2& origin, const Vec2& direction) const;

private:
    std::vector<Vec2> mVertices;
    Vec2 mCentroid;
    double mBoundingRadius;
};

/* Rectangular workspace with convex obstacles and a start pose */
struct World
{
    World() : mXMin(0.0), mYMin(0.0), mXMax(0.0), mYMax(0.0) { }

    bool InBounds(const Vec2& point) const
    {
        return point.x() >= this->mXMin && point.x() <= this->mXMax &&
               point.y() >= this->mYMin && point.y() <= this->mYMax;
    }

    double Width() const { return this->mXMax - this->mXMin; }
    double Height() const { return this->mYMax - this->mYMin; }

    double mXMin;
    double mYMin;
    double mXMax;
    double mYMax;
    Pose2 mStart;
    std::vector<Polygon> mObstacles;
};

/* True when the inflated point disc touches an obstacle or leaves
 * the workspace (obstacles are closed sets) */
bool Collides(const World& world, const Vec2& point, double inflation);

/* Consistency checks shared by the parser and programmatic builders */
void ValidateWorld(const World& world);

/* Structured text reader/writer; first line must be `format: 1` */
World ParseWorld(std::istream& input, const std::string& label);
World LoadWorld(const std::string& path);
void WriteWorld(const World& world, std::ostream& output);

} /* namespace vrvm */

#endif /* VRVM_WORLD_HPP */
