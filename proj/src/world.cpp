/* world.cpp */

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vrvm/world.hpp"

namespace vrvm {

namespace {

inline double Cross2(const Vec2& a, const Vec2& b)
{
    return a.x() * b.y() - a.y() * b.x();
}

double SignedArea(const std::vector<Vec2>& vertices)
{
    double area = 0.0;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = vertices[i];
        const Vec2& b = vertices[(i + 1) % n];
        area += Cross2(a, b);
    }
    return 0.5 * area;
}

double PointSegmentDistance(const Vec2& p, const Vec2& a, const Vec2& b)
{
    const Vec2 ab = b - a;
    const double lenSq = ab.squaredNorm();
    if (lenSq == 0.0)
        return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / lenSq, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

} /* namespace */

Polygon::Polygon(std::vector<Vec2> vertices) :
    mVertices(std::move(vertices)),
    mCentroid(Vec2::Zero()),
    mBoundingRadius(0.0)
{
    if (this->mVertices.size() < 3)
        throw InvalidInput("Polygon: fewer than three vertices");

    for (const Vec2& v : this->mVertices)
        if (!v.allFinite())
            throw InvalidInput("Polygon: vertex is not finite");

    /* Normalize the winding so that edges run counter-clockwise */
    const double area = SignedArea(this->mVertices);
    if (std::abs(area) < 1.0e-12)
        throw InvalidInput("Polygon: degenerate (zero area)");
    if (area < 0.0)
        std::reverse(this->mVertices.begin(), this->mVertices.end());

    const std::size_t n = this->mVertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = this->mVertices[i];
        const Vec2& b = this->mVertices[(i + 1) % n];
        const Vec2& c = this->mVertices[(i + 2) % n];
        if (Cross2(b - a, c - b) < -1.0e-9)
            throw InvalidInput("Polygon: vertices are not convex");
        this->mCentroid += a;
    }
    this->mCentroid /= static_cast<double>(n);

    for (const Vec2& v : this->mVertices)
        this->mBoundingRadius =
            std::max(this->mBoundingRadius, (v - this->mCentroid).norm());
}

bool Polygon::Contains(const Vec2& point) const
{
    const std::size_t n = this->mVertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = this->mVertices[i];
        const Vec2& b = this->mVertices[(i + 1) % n];
        if (Cross2(b - a, point - a) < -1.0e-12)
            return false;
    }
    return true;
}

double Polygon::BoundaryDistance(const Vec2& point) const
{
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = this->mVertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = this->mVertices[i];
        const Vec2& b = this->mVertices[(i + 1) % n];
        best = std::min(best, PointSegmentDistance(point, a, b));
    }
    return best;
}

double Polygon::RayIntersect(const Vec2& origin, const Vec2& direction) const
{
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = this->mVertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = this->mVertices[i];
        const Vec2& b = this->mVertices[(i + 1) % n];
        const Vec2 edge = b - a;
        const double denom = Cross2(direction, edge);
        if (std::abs(denom) < 1.0e-15)
            continue;
        const double t = Cross2(a - origin, edge) / denom;
        const double s = Cross2(a - origin, direction) / denom;
        if (t > 1.0e-9 && s >= 0.0 && s <= 1.0)
            best = std::min(best, t);
    }
    return best;
}

bool Collides(const World& world, const Vec2& point, const double inflation)
{
    if (!point.allFinite() || !std::isfinite(inflation) || inflation < 0.0)
        throw InvalidInput("Collides: non-finite point or bad inflation");

    if (point.x() < world.mXMin + inflation ||
        point.x() > world.mXMax - inflation ||
        point.y() < world.mYMin + inflation ||
        point.y() > world.mYMax - inflation)
        return true;

    for (const Polygon& obstacle : world.mObstacles) {
        const double centreDist = (point - obstacle.Centroid()).norm();
        if (centreDist > obstacle.BoundingRadius() + inflation)
            continue;
        if (obstacle.Contains(point))
            return true;
        if (obstacle.BoundaryDistance(point) <= inflation)
            return true;
    }
    return false;
}

void ValidateWorld(const World& world)
{
    if (!(world.mXMin < world.mXMax) || !(world.mYMin < world.mYMax))
        throw InvalidInput("World: bounds are empty or inverted");
    if (!world.InBounds(world.mStart.Position()))
        throw InvalidInput("World: start pose lies outside the bounds");
    if (Collides(world, world.mStart.Position(), 0.0))
        throw InvalidInput("World: start pose lies inside an obstacle");
}

namespace {

[[noreturn]] void ParseFail(const std::string& label, const int line,
                            const std::string& what)
{
    std::ostringstream msg;
    msg << label << ":" << line << ": " << what;
    throw InvalidInput(msg.str());
}

} /* namespace */

World ParseWorld(std::istream& input, const std::string& label)
{
    World world;
    bool haveFormat = false;
    bool haveBounds = false;
    bool haveStart = false;

    std::string line;
    int lineNo = 0;
    while (std::getline(input, line)) {
        ++lineNo;
        const auto firstChar = line.find_first_not_of(" \t\r");
        if (firstChar == std::string::npos || line[firstChar] == '#')
            continue;

        std::istringstream tokens(line);
        std::string key;
        tokens >> key;

        if (!haveFormat) {
            int version = 0;
            if (key != "format:" || !(tokens >> version) || version != 1)
                ParseFail(label, lineNo, "expected `format: 1` header");
            haveFormat = true;
            continue;
        }

        if (key == "bounds:") {
            if (!(tokens >> world.mXMin >> world.mYMin
                         >> world.mXMax >> world.mYMax))
                ParseFail(label, lineNo, "bounds needs xmin ymin xmax ymax");
            haveBounds = true;
        } else if (key == "start:") {
            double x = 0.0;
            double y = 0.0;
            double psi = 0.0;
            if (!(tokens >> x >> y >> psi))
                ParseFail(label, lineNo, "start needs x y psi");
            world.mStart = Pose2(x, y, psi);
            haveStart = true;
        } else if (key == "obstacle:") {
            std::vector<Vec2> vertices;
            double x = 0.0;
            double y = 0.0;
            while (tokens >> x >> y)
                vertices.emplace_back(x, y);
            if (!tokens.eof())
                ParseFail(label, lineNo, "obstacle vertex list is malformed");
            try {
                world.mObstacles.emplace_back(std::move(vertices));
            } catch (const InvalidInput& e) {
                ParseFail(label, lineNo, e.what());
            }
        } else {
            ParseFail(label, lineNo, "unknown directive `" + key + "`");
        }
    }

    if (!haveFormat)
        throw InvalidInput(label + ": empty file (missing `format: 1`)");
    if (!haveBounds)
        throw InvalidInput(label + ": missing `bounds:` line");
    if (!haveStart)
        throw InvalidInput(label + ": missing `start:` line");

    ValidateWorld(world);
    return world;
}

World LoadWorld(const std::string& path)
{
    std::ifstream input(path);
    if (!input)
        throw InvalidInput("LoadWorld: cannot open " + path);
    return ParseWorld(input, path);
}

void WriteWorld(const World& world, std::ostream& output)
{
    output << "format: 1\n";
    output << "bounds: " << world.mXMin << ' ' << world.mYMin << ' '
           << world.mXMax << ' ' << world.mYMax << '\n';
    output << "start: " << world.mStart.mX << ' ' << world.mStart.mY << ' '
           << world.mStart.mPsi << '\n';
    for (const Polygon& obstacle : world.mObstacles) {
        output << "obstacle:";
        for (const Vec2& v : obstacle.Vertices())
            output << ' ' << v.x() << ' ' << v.y();
        output << '\n';
    }
}

} /* namespace vrvm */
