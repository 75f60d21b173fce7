#include "porodyn/grid.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>

#include "porodyn/parallel.hpp"

namespace porodyn {

int thread_budget() {
  static const int budget = [] {
    if (const char* env = std::getenv("PORODYN_THREADS")) {
      char* end = nullptr;
      long v = std::strtol(env, &end, 10);
      if (end != env && v >= 1) return static_cast<int>(v > 64 ? 64 : v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw > 64 ? 64 : hw);
  }();
  return budget;
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
  const int budget = thread_budget();
  if (budget <= 1 || n < 4096) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<std::int64_t>(budget, n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  std::mutex err_mutex;
  std::exception_ptr first_error;
  for (int t = 0; t < workers; ++t) {
    const std::int64_t lo = n * t / workers;
    const std::int64_t hi = n * (t + 1) / workers;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::int64_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::int64_t Grid::cells() const {
  std::int64_t c = 1;
  for (int a = 0; a < d; ++a) c *= n;
  return c;
}

double Grid::cell_volume() const {
  double vol = 1.0;
  for (int a = 0; a < d; ++a) vol *= h();
  return vol;
}

void Grid::validate() const {
  if (d < 1 || d > 3)
    throw ConfigError("grid dimension must be 1, 2, or 3 (got " + std::to_string(d) + ")");
  if (n < 4 || (n & (n - 1)) != 0)
    throw ConfigError("grid resolution must be a power of two >= 4 (got " + std::to_string(n) + ")");
  if (!(L > 0.0) || !std::isfinite(L))
    throw ConfigError("grid half-width L must be positive and finite");
  if (cells() > kMaxCells)
    throw SizeError("grid has " + std::to_string(cells()) + " cells, exceeding the cap of " +
                    std::to_string(kMaxCells));
}

std::array<int, 3> unflatten(const Grid& g, std::int64_t flat) {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = g.d - 1; a >= 0; --a) {
    idx[static_cast<size_t>(a)] = static_cast<int>(flat % g.n);
    flat /= g.n;
  }
  return idx;
}

std::int64_t flatten(const Grid& g, const std::array<int, 3>& idx) {
  std::int64_t flat = 0;
  for (int a = 0; a < g.d; ++a) flat = flat * g.n + idx[static_cast<size_t>(a)];
  return flat;
}

Field sample(const Grid& g, const std::function<double(const std::array<double, 3>&)>& fn) {
  Field f(g);
  const std::int64_t N = g.cells();
  for (std::int64_t i = 0; i < N; ++i) {
    const auto idx = unflatten(g, i);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < g.d; ++a) x[static_cast<size_t>(a)] = g.center(idx[static_cast<size_t>(a)]);
    f[i] = fn(x);
  }
  return f;
}

namespace {

// Neighbor of cell i along axis `a` in direction `dir` (+1/-1), honoring the
// boundary condition. For ZeroFlux a step off the boundary reflects back to
// the cell itself, which makes the stencil difference vanish across that face
// (zero flux through the wall).
inline std::int64_t neighbor(const Grid& g, const std::array<int, 3>& idx, int a, int dir) {
  std::array<int, 3> j = idx;
  int& c = j[static_cast<size_t>(a)];
  c += dir;
  if (c < 0 || c >= g.n) {
    if (g.bc == BC::Periodic) {
      c = (c + g.n) % g.n;
    } else {
      c -= dir;  // reflect: ghost value equals interior value
    }
  }
  return flatten(g, j);
}

}  // namespace

Field laplacian(const Field& w) {
  const Grid& g = w.grid;
  Field out(g);
  const double inv_h2 = 1.0 / (g.h() * g.h());
  const std::int64_t N = g.cells();
  parallel_for(N, [&](std::int64_t i) {
    const auto idx = unflatten(g, i);
    double acc = 0.0;
    for (int a = 0; a < g.d; ++a) {
      acc += w[neighbor(g, idx, a, +1)] + w[neighbor(g, idx, a, -1)] - 2.0 * w[i];
    }
    out[i] = acc * inv_h2;
  });
  return out;
}

double integral(const Field& w) {
  double s = 0.0;
  for (double x : w.v) s += x;
  return s * w.grid.cell_volume();
}

double norm_lp(const Field& w, double p) {
  if (!(p >= 1.0)) throw DomainError("norm_lp requires p >= 1");
  double s = 0.0;
  for (double x : w.v) s += std::pow(std::abs(x), p);
  return std::pow(s * w.grid.cell_volume(), 1.0 / p);
}

double norm_l1_diff(const Field& u, const Field& w) {
  if (!(u.grid == w.grid)) throw DomainError("norm_l1_diff requires matching grids");
  double s = 0.0;
  for (size_t i = 0; i < u.v.size(); ++i) s += std::abs(u.v[i] - w.v[i]);
  return s * u.grid.cell_volume();
}

double grad_norm_sq(const Field& w) {
  const Grid& g = w.grid;
  const std::int64_t N = g.cells();
  double s = 0.0;
  for (std::int64_t i = 0; i < N; ++i) {
    const auto idx = unflatten(g, i);
    for (int a = 0; a < g.d; ++a) {
      // One face per cell and axis, toward the +1 neighbor; under reflecting
      // boundaries the wrap face does not exist and the difference is zero.
      if (g.bc == BC::ZeroFlux && idx[static_cast<size_t>(a)] == g.n - 1) continue;
      const double diff = w[neighbor(g, idx, a, +1)] - w[i];
      s += diff * diff;
    }
  }
  return s * g.cell_volume() / (g.h() * g.h());
}

double min_value(const Field& w) {
  double m = w.v.empty() ? 0.0 : w.v[0];
  for (double x : w.v) m = std::min(m, x);
  return m;
}

double max_value(const Field& w) {
  double m = w.v.empty() ? 0.0 : w.v[0];
  for (double x : w.v) m = std::max(m, x);
  return m;
}

void assert_finite(const Field& w, const char* what) {
  for (double x : w.v) {
    if (!std::isfinite(x))
      throw NumericError(std::string(what) + " contains a non-finite value");
  }
}

}  // namespace porodyn
