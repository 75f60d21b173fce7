#include "porodyn/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace porodyn {

namespace {

// FFTW plan creation/destruction is not thread-safe; execution is. Plans are
// cached per (rank, n, sign) and created FFTW_UNALIGNED so they can run on any
// caller buffer via the new-array execute interface.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

fftw_plan cached_plan(const Grid& g, int sign) {
  static std::map<std::tuple<int, int, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  const auto key = std::make_tuple(g.d, g.n, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const std::int64_t N = g.cells();
  std::vector<std::complex<double>> in(static_cast<size_t>(N)), out(static_cast<size_t>(N));
  int dims[3] = {g.n, g.n, g.n};
  fftw_plan plan = fftw_plan_dft(g.d, dims, reinterpret_cast<fftw_complex*>(in.data()),
                                 reinterpret_cast<fftw_complex*>(out.data()), sign,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plan) throw NumericError("FFT plan creation failed");
  cache.emplace(key, plan);
  return plan;
}

std::vector<std::complex<double>> run_dft(const Grid& g, const std::vector<std::complex<double>>& in,
                                          int sign) {
  const std::int64_t N = g.cells();
  std::vector<std::complex<double>> work(in);
  std::vector<std::complex<double>> out(static_cast<size_t>(N));
  fftw_plan plan = cached_plan(g, sign);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(work.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace

std::vector<std::complex<double>> dft_forward(const Field& u) {
  const Grid& g = u.grid;
  if (g.bc != BC::Periodic) throw BCError("DFT requires periodic boundary conditions");
  std::vector<std::complex<double>> in(u.v.begin(), u.v.end());
  return run_dft(g, in, FFTW_FORWARD);
}

Field dft_inverse(const Grid& g, const std::vector<std::complex<double>>& spectrum) {
  if (g.bc != BC::Periodic) throw BCError("DFT requires periodic boundary conditions");
  if (static_cast<std::int64_t>(spectrum.size()) != g.cells())
    throw DomainError("spectrum size does not match grid");
  auto out = run_dft(g, spectrum, FFTW_BACKWARD);
  Field f(g);
  const double inv_n = 1.0 / static_cast<double>(g.cells());
  for (size_t i = 0; i < out.size(); ++i) f.v[i] = out[i].real() * inv_n;
  return f;
}

int signed_mode(int k, int n) { return k < n / 2 ? k : k - n; }

double stencil_symbol(const Grid& g, const std::array<int, 3>& k) {
  const double h = g.h();
  double s = 0.0;
  for (int a = 0; a < g.d; ++a) {
    const double theta = 2.0 * M_PI * k[static_cast<size_t>(a)] / g.n;
    s += 1.0 - std::cos(theta);
  }
  return 2.0 * s / (h * h);
}

double hminus1_inner(const Field& u, const Field& w) {
  const Grid& g = u.grid;
  if (!(g == w.grid)) throw DomainError("hminus1_inner requires matching grids");
  if (g.bc != BC::Periodic)
    throw BCError("hminus1_inner requires periodic boundary conditions");
  const auto uh = dft_forward(u);
  const auto wh = dft_forward(w);
  const std::int64_t N = g.cells();
  double acc = 0.0;
  for (std::int64_t i = 1; i < N; ++i) {
    const auto idx = unflatten(g, i);
    // Row-major order puts k = 0 exactly at flat index 0; every other index
    // has at least one nonzero component, so λ_k > 0.
    const double lambda = stencil_symbol(g, idx);
    const std::complex<double> prod =
        uh[static_cast<size_t>(i)] * std::conj(wh[static_cast<size_t>(i)]);
    acc += prod.real() / lambda;
  }
  return acc * g.cell_volume() / static_cast<double>(N);
}

}  // namespace porodyn
