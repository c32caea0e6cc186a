#include "bridgekit/path.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "bridgekit/errors.hpp"

namespace bridgekit {

namespace {

bool same_time(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

std::size_t PathSample::index_of(double time) const {
  auto it = std::lower_bound(times.begin(), times.end(), time - 1e-12 * std::max(1.0, std::abs(time)));
  if (it != times.end() && same_time(*it, time)) return static_cast<std::size_t>(it - times.begin());
  std::ostringstream msg;
  msg << "path has no grid point at time " << time;
  throw MissingGridPointError(msg.str());
}

void validate(const PathSample& path) {
  if (path.times.size() != path.values.size()) {
    throw GridMismatchError("path times and values differ in length");
  }
  for (std::size_t i = 1; i < path.times.size(); ++i) {
    if (!(path.times[i] > path.times[i - 1])) {
      throw GridMismatchError("path times must be strictly increasing");
    }
  }
}

PathSample reverse(const PathSample& path, double horizon) {
  validate(path);
  PathSample out;
  out.pinned = path.pinned;
  out.times.reserve(path.size());
  out.values.reserve(path.size());
  for (std::size_t i = path.size(); i-- > 0;) {
    out.times.push_back(horizon - path.times[i]);
    out.values.push_back(path.values[i]);
  }
  return out;
}

PathSample shift(const PathSample& path, double time) {
  const std::size_t start = path.index_of(time);
  PathSample out;
  for (std::size_t i = start; i < path.size(); ++i) {
    out.times.push_back(path.times[i] - path.times[start]);
    out.values.push_back(path.values[i]);
  }
  return out;
}

PathSample PathPool::path(std::size_t i) const {
  auto row = draw(i);
  return PathSample{times, std::vector<double>(row.begin(), row.end()), false};
}

std::vector<double> PathPool::column(std::size_t k) const {
  std::vector<double> out(draws);
  for (std::size_t i = 0; i < draws; ++i) out[i] = values[i * times.size() + k];
  return out;
}

std::vector<double> uniform_grid(double horizon, std::size_t points) {
  if (points < 2) throw DomainError("a grid needs at least the two endpoints");
  if (!(horizon > 0.0)) throw DomainError("grid horizon must be > 0");
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = horizon * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  grid.back() = horizon;
  return grid;
}

void write_csv(std::ostream& out, const PathPool& pool) {
  out << "draw_id,time,value\n" << std::setprecision(17);
  for (std::size_t d = 0; d < pool.draws; ++d) {
    auto row = pool.draw(d);
    for (std::size_t k = 0; k < pool.grid_size(); ++k) {
      out << d << ',' << pool.times[k] << ',' << row[k] << '\n';
    }
  }
}

void write_csv(std::ostream& out, const PathSample& path, std::size_t draw_id) {
  out << "draw_id,time,value\n" << std::setprecision(17);
  for (std::size_t k = 0; k < path.size(); ++k) {
    out << draw_id << ',' << path.times[k] << ',' << path.values[k] << '\n';
  }
}

}  // namespace bridgekit
