#include "hauslev/edt.hpp"

#include <stdexcept>

#include "hauslev/parallel.hpp"

namespace hauslev {
namespace {

constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max();

struct LineScratch {
  std::vector<std::int64_t> f;
  std::vector<std::int64_t> out;
  std::vector<std::int64_t> v;
  std::vector<double> z;

  explicit LineScratch(std::uint32_t n) : f(n), out(n), v(n), z(n + 1) {}
};

// 1-D lower envelope of parabolas (q - p)^2 + f[p] over finite f[p].
void envelope_1d(LineScratch& s, std::uint32_t n) {
  const auto& f = s.f;
  auto& v = s.v;
  auto& z = s.z;
  std::int64_t k = -1;
  for (std::int64_t q = 0; q < static_cast<std::int64_t>(n); ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -std::numeric_limits<double>::infinity();
      z[1] = std::numeric_limits<double>::infinity();
      continue;
    }
    double sct = 0.0;
    while (true) {
      const std::int64_t p = v[k];
      sct = static_cast<double>((f[q] + q * q) - (f[p] + p * p)) / static_cast<double>(2 * (q - p));
      if (sct <= z[k]) {
        --k;
        if (k < 0) break;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -std::numeric_limits<double>::infinity() : sct;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  if (k < 0) {
    std::fill(s.out.begin(), s.out.begin() + n, kInf);
    return;
  }
  std::int64_t m = 0;
  for (std::int64_t q = 0; q < static_cast<std::int64_t>(n); ++q) {
    while (z[m + 1] < static_cast<double>(q)) ++m;
    const std::int64_t dq = q - v[m];
    s.out[q] = dq * dq + f[v[m]];
  }
}

std::uint64_t axis_stride(const Lattice& lat, int axis) {
  std::uint64_t stride = 1;
  for (int i = axis + 1; i < lat.d; ++i) stride *= lat.side;
  return stride;
}

void pass_axis(std::vector<std::int64_t>& grid, const Lattice& lat, int axis, bool parallel) {
  const std::uint64_t stride = axis_stride(lat, axis);
  const std::uint64_t n = lat.side;
  const std::uint64_t lines = grid.size() / n;
  const std::uint64_t block = stride * n;
  auto run_line = [&](LineScratch& s, std::uint64_t line) {
    // line -> (outer block, offset within block)
    const std::uint64_t base = (line / stride) * block + (line % stride);
    for (std::uint64_t q = 0; q < n; ++q) s.f[q] = grid[base + q * stride];
    envelope_1d(s, static_cast<std::uint32_t>(n));
    for (std::uint64_t q = 0; q < n; ++q) grid[base + q * stride] = s.out[q];
  };
  if (parallel) {
#pragma omp parallel
    {
      LineScratch s(static_cast<std::uint32_t>(n));
#pragma omp for schedule(static)
      for (std::int64_t line = 0; line < static_cast<std::int64_t>(lines); ++line) {
        run_line(s, static_cast<std::uint64_t>(line));
      }
    }
  } else {
    LineScratch s(static_cast<std::uint32_t>(n));
    for (std::uint64_t line = 0; line < lines; ++line) run_line(s, line);
  }
}

std::vector<std::uint32_t> transform(std::span<const std::uint8_t> sources, const Lattice& lat,
                                     bool parallel) {
  if (lat.d < 1 || lat.side == 0) throw std::invalid_argument("distance transform: empty lattice");
  if (sources.size() != lat.size()) {
    throw std::invalid_argument("distance transform: source mask does not match lattice");
  }
  if (static_cast<std::uint64_t>(lat.side) > (std::uint64_t{1} << 15)) {
    throw std::invalid_argument("distance transform: side exceeds 2^15");
  }
  std::vector<std::int64_t> grid(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) grid[i] = sources[i] ? 0 : kInf;
  for (int axis = lat.d - 1; axis >= 0; --axis) pass_axis(grid, lat, axis, parallel);
  std::vector<std::uint32_t> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out[i] = grid[i] == kInf ? kUnreached : static_cast<std::uint32_t>(grid[i]);
  }
  return out;
}

}  // namespace

std::vector<std::uint32_t> squared_distance_transform(std::span<const std::uint8_t> sources,
                                                      const Lattice& lattice) {
  return transform(sources, lattice, true);
}

std::vector<std::uint32_t> squared_distance_transform_serial(
    std::span<const std::uint8_t> sources, const Lattice& lattice) {
  return transform(sources, lattice, false);
}

}  // namespace hauslev
