// Periodic tensor grids in d ∈ {1,2,3}, cell-centered fields, and the discrete
// operators every other module builds on: the 2d+1-point Laplacian, cell-volume
// integrals, and L^p norms. The box is [-L, L)^d with n cells per axis.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "porodyn/errors.hpp"

namespace porodyn {

enum class BC { Periodic, ZeroFlux };

struct Grid {
  int d = 1;
  int n = 64;        // cells per axis, power of two, >= 4
  double L = 4.0;    // half-width of the box [-L, L)^d
  BC bc = BC::Periodic;

  // Hard cap on total cells; keeps the O(N^2) seminorm paths and snapshots
  // at desk scale.
  static constexpr std::int64_t kMaxCells = std::int64_t(1) << 24;

  double h() const { return 2.0 * L / n; }
  std::int64_t cells() const;
  double cell_volume() const;  // h^d

  // Center coordinate of cell index i along one axis: -L + (i + 1/2) h.
  double center(int i) const { return -L + (i + 0.5) * h(); }

  // Throws ConfigError / SizeError when the invariants fail.
  void validate() const;

  bool operator==(const Grid& o) const {
    return d == o.d && n == o.n && L == o.L && bc == o.bc;
  }
};

struct Field {
  Grid grid;
  std::vector<double> v;

  Field() = default;
  explicit Field(const Grid& g) : grid(g), v(static_cast<size_t>(g.cells()), 0.0) {}

  static Field zeros(const Grid& g) { return Field(g); }
  static Field constant(const Grid& g, double c) {
    Field f(g);
    for (auto& x : f.v) x = c;
    return f;
  }

  std::int64_t size() const { return static_cast<std::int64_t>(v.size()); }
  double& operator[](std::int64_t i) { return v[static_cast<size_t>(i)]; }
  double operator[](std::int64_t i) const { return v[static_cast<size_t>(i)]; }
};

// Decomposes a flat row-major index (last axis fastest) into per-axis indices.
std::array<int, 3> unflatten(const Grid& g, std::int64_t flat);
std::int64_t flatten(const Grid& g, const std::array<int, 3>& idx);

// Fills f[i] = fn(x(i)) where x is the cell-center coordinate vector.
Field sample(const Grid& g, const std::function<double(const std::array<double, 3>&)>& fn);

// 2d+1-point stencil (Σ_nbr w_j − 2d w_i)/h² with periodic wraparound or
// reflective ghosts (ZeroFlux: the boundary face carries zero flux).
Field laplacian(const Field& w);

double integral(const Field& w);                    // h^d Σ w_i
double norm_lp(const Field& w, double p);           // (h^d Σ |w_i|^p)^{1/p}, p >= 1
double norm_l1_diff(const Field& u, const Field& w);

// Discrete Dirichlet energy h^d Σ_faces ((w_j - w_i)/h)², one term per face;
// reflecting boundaries contribute nothing. Satisfies the exact summation by
// parts h^d Σ w_i (Δ_h w)_i = -grad_norm_sq(w).
double grad_norm_sq(const Field& w);

double min_value(const Field& w);
double max_value(const Field& w);

// Throws NumericError if the field contains NaN or Inf.
void assert_finite(const Field& w, const char* what);

}  // namespace porodyn
