#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace bridgekit {

/// A discretised path: values at strictly increasing times.
struct PathSample {
  std::vector<double> times;
  std::vector<double> values;
  /// values.front() == x and values.back() == y by construction (bridge samples).
  bool pinned = false;

  bool operator==(const PathSample&) const = default;

  std::size_t size() const { return times.size(); }
  /// Index of `time` in the grid; throws MissingGridPointError when absent.
  std::size_t index_of(double time) const;
  double value_at(double time) const { return values[index_of(time)]; }
};

/// Checks that times are strictly increasing and values have matching length.
void validate(const PathSample& path);

/// Time reversal on [0, horizon]: s -> horizon - s, values reversed.
PathSample reverse(const PathSample& path, double horizon);

/// Shift operator: the path from `time` onward, re-based so it starts at 0.
PathSample shift(const PathSample& path, double time);

/// Many paths on a common grid, stored row-major (draw, time index).
struct PathPool {
  std::vector<double> times;
  std::vector<double> values;
  std::size_t draws = 0;

  std::size_t grid_size() const { return times.size(); }
  std::span<const double> draw(std::size_t i) const {
    return {values.data() + i * times.size(), times.size()};
  }
  std::span<double> draw(std::size_t i) {
    return {values.data() + i * times.size(), times.size()};
  }
  PathSample path(std::size_t i) const;
  /// Values of every draw at grid index k.
  std::vector<double> column(std::size_t k) const;
};

/// `points` equispaced times on [0, horizon], both endpoints included (points >= 2).
std::vector<double> uniform_grid(double horizon, std::size_t points);

/// Writes `draw_id,time,value` rows (with header).
void write_csv(std::ostream& out, const PathPool& pool);
void write_csv(std::ostream& out, const PathSample& path, std::size_t draw_id = 0);

}  // namespace bridgekit
