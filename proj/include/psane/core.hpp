#pragma once

// Shared value types: planar vectors, the discretized workspace, dense grids
// and the exception hierarchy used across the engine.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace psane {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2 a, Vec2 b) = default;

    double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

struct CellIndex {
    int ix = 0;
    int iy = 0;
    friend bool operator==(CellIndex a, CellIndex b) = default;
};

/* Error hierarchy. Runtime failures of a trial are recorded as outcomes;
 * these are reserved for contract violations and bad inputs. */
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/* Invalid configuration; `field()` names the offending key when known. */
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg, std::string field = {})
        : Error(field.empty() ? msg : field + ": " + msg), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class DomainError : public Error { using Error::Error; };
class DataError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };
/* The robot left the certified safe set. */
class SafetyBreach : public Error { using Error::Error; };
class NoFrontier : public Error { using Error::Error; };
class NoSafePath : public Error { using Error::Error; };
class RobotBoxedIn : public Error { using Error::Error; };

/* Rectangular workspace discretized into square cells. `origin` is the world
 * position of the center of cell (0,0); cells extend resolution/2 around
 * their centers. */
struct WorkspaceSpec {
    double width_m = 16.0;
    double height_m = 10.0;
    double resolution = 0.5;
    Vec2 origin{0.25, 0.25};

    int nx() const { return static_cast<int>(std::lround(width_m / resolution)); }
    int ny() const { return static_cast<int>(std::lround(height_m / resolution)); }
    std::size_t cell_count() const { return static_cast<std::size_t>(nx()) * ny(); }

    /* Throws ConfigError unless dimensions are positive and each axis has at
     * least 8 cells. */
    void validate() const;

    Vec2 cell_center(CellIndex c) const {
        return {origin.x + c.ix * resolution, origin.y + c.iy * resolution};
    }
    bool in_bounds(CellIndex c) const {
        return c.ix >= 0 && c.iy >= 0 && c.ix < nx() && c.iy < ny();
    }
    /* True if p lies inside the area covered by the cells. */
    bool contains(Vec2 p) const;
    /* Cell whose square contains p, clamped to the grid. */
    CellIndex cell_of(Vec2 p) const;
    std::size_t linear(CellIndex c) const {
        return static_cast<std::size_t>(c.iy) * nx() + c.ix;
    }
    CellIndex unlinear(std::size_t i) const {
        return {static_cast<int>(i % nx()), static_cast<int>(i / nx())};
    }
};

/* Dense row-major grid (x fastest). */
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int nx, int ny, T fill = T{}) : nx_(nx), ny_(ny), data_(static_cast<std::size_t>(nx) * ny, fill) {}
    explicit Grid(const WorkspaceSpec& spec, T fill = T{}) : Grid(spec.nx(), spec.ny(), fill) {}

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(int ix, int iy) { return data_[static_cast<std::size_t>(iy) * nx_ + ix]; }
    const T& operator()(int ix, int iy) const { return data_[static_cast<std::size_t>(iy) * nx_ + ix]; }
    T& operator()(CellIndex c) { return (*this)(c.ix, c.iy); }
    const T& operator()(CellIndex c) const { return (*this)(c.ix, c.iy); }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    bool in_bounds(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < nx_ && iy < ny_; }
    bool same_shape(const auto& other) const { return nx_ == other.nx() && ny_ == other.ny(); }

    std::vector<T>& values() { return data_; }
    const std::vector<T>& values() const { return data_; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    int nx_ = 0;
    int ny_ = 0;
    std::vector<T> data_;
};

using ScalarGrid = Grid<double>;
/* Boolean grid; uint8_t avoids std::vector<bool> proxies. */
using Mask = Grid<std::uint8_t>;

inline std::size_t count_set(const Mask& m) {
    std::size_t n = 0;
    for (auto v : m.values()) n += v ? 1 : 0;
    return n;
}

/* Deterministic 64-bit mixing (splitmix64 finalizer), used to derive
 * independent per-trial streams from a base seed. */
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace psane
