#include "porodyn/phi_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace porodyn {

namespace {

constexpr double kEndpointGuard = 1e-14;
constexpr int kMaxSeriesTerms = 4000;

// ---------------------------------------------------------------------------
// Gauss-Legendre 16-point rule on [-1, 1].
constexpr double kGL16X[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                              0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                              0.9445750230732326, 0.9894009349916499};
constexpr double kGL16W[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                              0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                              0.0622535239386479, 0.0271524594117541};

template <class F>
double gl16(const F& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 8; ++i) {
    s += kGL16W[i] * (f(mid + half * kGL16X[i]) + f(mid - half * kGL16X[i]));
  }
  return s * half;
}

template <class F>
double gl_panels(const F& f, double a, double b, int panels) {
  double s = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double pa = a + (b - a) * p / panels;
    const double pb = a + (b - a) * (p + 1) / panels;
    s += gl16(f, pa, pb);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Stable power-difference helpers for the biofilm tail series.
//
//   P(q; x1, x2) = ∫_{x2}^{x1} t^{q-1} dt = (x1^q - x2^q)/q,  0 < x2 <= x1,
// with the q -> 0 limit ln(x1/x2). Evaluated through expm1 to avoid
// cancellation, and through a series in q when |q| is tiny.

// ∫_0^x ln^k(t) dt by the recursion I_k = x ln^k x - k I_{k-1}.
double int_ln_pow(int k, double x) {
  const double lx = std::log(x);
  double I = x;  // k = 0
  double lp = 1.0;
  for (int j = 1; j <= k; ++j) {
    lp *= lx;
    I = x * lp - j * I;
  }
  return I;
}

double power_diff(double q, double x1, double x2) {
  if (std::abs(q) < 1e-4) {
    // Σ_{k>=1} q^{k-1} (ln^k x1 - ln^k x2)/k!
    const double l1 = std::log(x1), l2 = std::log(x2);
    double sum = 0.0, qp = 1.0, p1 = 1.0, p2 = 1.0, fact = 1.0;
    for (int k = 1; k <= 9; ++k) {
      p1 *= l1;
      p2 *= l2;
      fact *= k;
      sum += qp * (p1 - p2) / fact;
      qp *= q;
    }
    return sum;
  }
  // Factor out the dominant power so the expm1 argument is <= 0 and the
  // product never forms 0 * inf.
  const double l1 = std::log(x1), l2 = std::log(x2);
  if (q > 0.0) return -std::exp(q * l1) * std::expm1(q * (l2 - l1)) / q;
  return std::exp(q * l2) * std::expm1(q * (l1 - l2)) / q;
}

// G(q; s) = ∫_{1/2}^{s} P(q; 1/2, 1-σ) dσ for s in (1/2, 1).
double power_diff_integral(double q, double s) {
  const double delta = s - 0.5;
  const double x2 = 1.0 - s;
  if (std::abs(q) < 1e-4) {
    // Σ_{k>=1} q^{k-1}/k! [ln^k(1/2) Δ - (I_k(1/2) - I_k(1-s))]
    const double lhalf = std::log(0.5);
    double sum = 0.0, qp = 1.0, lp = 1.0, fact = 1.0;
    for (int k = 1; k <= 9; ++k) {
      lp *= lhalf;
      fact *= k;
      const double Jk = int_ln_pow(k, 0.5) - int_ln_pow(k, x2);
      sum += qp * (lp * delta - Jk) / fact;
      qp *= q;
    }
    return sum;
  }
  return (std::exp(q * std::log(0.5)) * delta - power_diff(q + 1.0, 0.5, x2)) / q;
}

// ---------------------------------------------------------------------------
// Biofilm evaluation, positive branch s in [0, 1).
//
// For s <= 1/2 expand (1-z)^{-a} around 0:
//   φ(s) = Σ_k c_k s^{b+1+k}/(b+1+k),  c_0 = 1, c_{k+1} = c_k (a+k)/(k+1).
// For s > 1/2 substitute t = 1-z and expand (1-t)^b:
//   φ(s) = φ(1/2) + Σ_j t_j P(j-a+1; 1/2, 1-s),  t_0 = 1,
//   t_{j+1} = t_j (j-b)/(j+1)   (terminates for integer b).

double biofilm_phi_center(double a, double b, double s) {
  if (s == 0.0) return 0.0;
  double c = 1.0, pw = std::pow(s, b + 1.0), sum = 0.0;
  for (int k = 0; k < kMaxSeriesTerms; ++k) {
    const double term = c * pw / (b + 1.0 + k);
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum) + 1e-300) return sum;
    c *= (a + k) / (k + 1.0);
    pw *= s;
  }
  throw NumericError("biofilm series did not converge (center)");
}

double biofilm_Phi_center(double a, double b, double s) {
  if (s == 0.0) return 0.0;
  double c = 1.0, pw = std::pow(s, b + 2.0), sum = 0.0;
  for (int k = 0; k < kMaxSeriesTerms; ++k) {
    const double term = c * pw / ((b + 1.0 + k) * (b + 2.0 + k));
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum) + 1e-300) return sum;
    c *= (a + k) / (k + 1.0);
    pw *= s;
  }
  throw NumericError("biofilm series did not converge (center primitive)");
}

double biofilm_phi_pos(double a, double b, double s) {
  if (s <= 0.5) return biofilm_phi_center(a, b, s);
  double t = 1.0, sum = biofilm_phi_center(a, b, 0.5);
  for (int j = 0; j < kMaxSeriesTerms; ++j) {
    const double term = t * power_diff(j - a + 1.0, 0.5, 1.0 - s);
    sum += term;
    t *= (j - b) / (j + 1.0);
    if (t == 0.0 || std::abs(term) <= 1e-17 * std::abs(sum) + 1e-300) return sum;
  }
  throw NumericError("biofilm series did not converge (tail)");
}

double biofilm_Phi_pos(double a, double b, double s) {
  if (s <= 0.5) return biofilm_Phi_center(a, b, s);
  const double phi_half = biofilm_phi_center(a, b, 0.5);
  double t = 1.0, sum = biofilm_Phi_center(a, b, 0.5) + phi_half * (s - 0.5);
  for (int j = 0; j < kMaxSeriesTerms; ++j) {
    const double term = t * power_diff_integral(j - a + 1.0, s);
    sum += term;
    t *= (j - b) / (j + 1.0);
    if (t == 0.0 || std::abs(term) <= 1e-17 * std::abs(sum) + 1e-300) return sum;
  }
  throw NumericError("biofilm series did not converge (tail primitive)");
}

void check_inside(const PhiModel& M, double z, const char* op) {
  if (!std::isfinite(z)) throw DomainError(std::string(op) + ": non-finite argument");
  if (std::isfinite(M.lo) && z < M.lo + kEndpointGuard)
    throw DomainError(std::string(op) + ": argument " + std::to_string(z) +
                      " at or below interval endpoint " + std::to_string(M.lo));
  if (std::isfinite(M.hi) && z > M.hi - kEndpointGuard)
    throw DomainError(std::string(op) + ": argument " + std::to_string(z) +
                      " at or above interval endpoint " + std::to_string(M.hi));
}

// ---------------------------------------------------------------------------
// Fritsch-Carlson monotone cubic slopes. Data that is monotone between two
// adjacent nodes yields an interpolant confined to the node values there, so
// lower bounds on the data survive interpolation exactly.
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  std::vector<double> d(n, 0.0);
  if (n == 1) return d;
  std::vector<double> h(n - 1), delta(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) {
    h[i] = x[i + 1] - x[i];
    delta[i] = (y[i + 1] - y[i]) / h[i];
  }
  if (n == 2) {
    d[0] = d[1] = delta[0];
    return d;
  }
  for (size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] == 0.0 || delta[i] == 0.0 || (delta[i - 1] > 0.0) != (delta[i] > 0.0)) {
      d[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0.0) return 0.0;
    if (d0 * d1 < 0.0 && std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
    return s;
  };
  d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  return d;
}

// Ensures 0 is among the nodes, inserting it with linearly interpolated value.
void insert_zero_node(std::vector<double>& x, std::vector<double>& y) {
  for (double xi : x)
    if (xi == 0.0) return;
  if (x.front() > 0.0 || x.back() < 0.0)
    throw ModelError("tabulated node range must contain 0");
  const auto it = std::upper_bound(x.begin(), x.end(), 0.0);
  const size_t i = static_cast<size_t>(it - x.begin());
  const double t = (0.0 - x[i - 1]) / (x[i] - x[i - 1]);
  const double y0 = y[i - 1] + t * (y[i] - y[i - 1]);
  x.insert(x.begin() + static_cast<std::ptrdiff_t>(i), 0.0);
  y.insert(y.begin() + static_cast<std::ptrdiff_t>(i), y0);
}

void check_nodes(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ModelError("tabulated nodes and values differ in length");
  if (x.size() < 2) throw ModelError("tabulated model needs at least 2 nodes");
  for (size_t i = 0; i + 1 < x.size(); ++i)
    if (!(x[i] < x[i + 1])) throw ModelError("tabulated nodes must be strictly increasing");
  for (double v : y)
    if (!std::isfinite(v)) throw ModelError("tabulated values must be finite");
}

// Anchors a cumulative sum so that it vanishes at the node x = 0.
void anchor_at_zero(const std::vector<double>& x, std::vector<double>& cum) {
  size_t zi = 0;
  while (zi < x.size() && x[zi] != 0.0) ++zi;
  if (zi == x.size()) throw ModelError("internal: zero node missing");
  const double shift = cum[zi];
  for (double& v : cum) v -= shift;
}

double poly_eval(const std::array<double, 5>& c, double t) {
  return c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * c[4])));
}

double poly_deriv(const std::array<double, 5>& c, double t) {
  return c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * 4.0 * c[4]));
}

double poly_integral(const std::array<double, 5>& c, double t) {
  return t * (c[0] + t * (c[1] / 2.0 + t * (c[2] / 3.0 + t * (c[3] / 4.0 + t * c[4] / 5.0))));
}

}  // namespace

// ---------------------------------------------------------------------------
// TabulatedCurve

int TabulatedCurve::segment(double z) const {
  const auto it = std::upper_bound(x.begin(), x.end(), z);
  std::ptrdiff_t i = it - x.begin() - 1;
  i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(x.size()) - 2);
  return static_cast<int>(i);
}

double TabulatedCurve::phi(double z) const {
  if (z < x.front()) return phi_at_x.front() + slope_lo * (z - x.front());
  if (z > x.back()) return phi_at_x.back() + slope_hi * (z - x.back());
  const int i = segment(z);
  return poly_eval(c[static_cast<size_t>(i)], z - x[static_cast<size_t>(i)]);
}

double TabulatedCurve::D(double z) const {
  if (z < x.front()) return slope_lo;
  if (z > x.back()) return slope_hi;
  const int i = segment(z);
  return poly_deriv(c[static_cast<size_t>(i)], z - x[static_cast<size_t>(i)]);
}

double TabulatedCurve::Phi(double z) const {
  if (z < x.front()) {
    const double t = z - x.front();
    return Phi_at_x.front() + phi_at_x.front() * t + 0.5 * slope_lo * t * t;
  }
  if (z > x.back()) {
    const double t = z - x.back();
    return Phi_at_x.back() + phi_at_x.back() * t + 0.5 * slope_hi * t * t;
  }
  const int i = segment(z);
  return Phi_at_x[static_cast<size_t>(i)] +
         poly_integral(c[static_cast<size_t>(i)], z - x[static_cast<size_t>(i)]);
}

// ---------------------------------------------------------------------------
// Factories

PhiModel PhiModel::biofilm(double a, double b) {
  PhiModel M;
  M.kind = PhiKind::Biofilm;
  M.a = a;
  M.b = b;
  M.lo = -1.0;
  M.hi = 1.0;
  M.validate();
  return M;
}

PhiModel PhiModel::pme(double m) {
  PhiModel M;
  M.kind = PhiKind::PME;
  M.m = m;
  M.lo = -HUGE_VAL;
  M.hi = HUGE_VAL;
  M.validate();
  return M;
}

PhiModel PhiModel::tabulated_from_D(const std::vector<double>& nodes,
                                    const std::vector<double>& D_values, double tail_slope_lo,
                                    double tail_slope_hi) {
  std::vector<double> x = nodes, y = D_values;
  check_nodes(x, y);
  for (double v : y)
    if (v < 0.0) throw ModelError("D samples must be nonnegative");
  insert_zero_node(x, y);

  const auto d = pchip_slopes(x, y);
  auto curve = std::make_shared<TabulatedCurve>();
  const size_t n = x.size();
  curve->x = x;
  curve->c.resize(n - 1);
  curve->phi_at_x.assign(n, 0.0);
  curve->Phi_at_x.assign(n, 0.0);

  // φ on segment i is the exact integral of the Hermite cubic of D.
  std::vector<std::array<double, 4>> Dc(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) {
    const double h = x[i + 1] - x[i];
    const double delta = (y[i + 1] - y[i]) / h;
    Dc[i] = {y[i], d[i], (3.0 * delta - 2.0 * d[i] - d[i + 1]) / h,
             (d[i] + d[i + 1] - 2.0 * delta) / (h * h)};
  }
  for (size_t i = 0; i + 1 < n; ++i) {
    const double h = x[i + 1] - x[i];
    curve->phi_at_x[i + 1] =
        curve->phi_at_x[i] + h * (Dc[i][0] + h * (Dc[i][1] / 2.0 + h * (Dc[i][2] / 3.0 + h * Dc[i][3] / 4.0)));
  }
  anchor_at_zero(x, curve->phi_at_x);
  for (size_t i = 0; i + 1 < n; ++i) {
    curve->c[i] = {curve->phi_at_x[i], Dc[i][0], Dc[i][1] / 2.0, Dc[i][2] / 3.0, Dc[i][3] / 4.0};
  }
  for (size_t i = 0; i + 1 < n; ++i) {
    const double h = x[i + 1] - x[i];
    curve->Phi_at_x[i + 1] = curve->Phi_at_x[i] + poly_integral(curve->c[i], h);
  }
  anchor_at_zero(x, curve->Phi_at_x);
  curve->slope_lo = tail_slope_lo < 0.0 ? y.front() : tail_slope_lo;
  curve->slope_hi = tail_slope_hi < 0.0 ? y.back() : tail_slope_hi;

  PhiModel M;
  M.kind = PhiKind::Tabulated;
  M.table = curve;
  M.lo = curve->slope_lo > 0.0 ? -HUGE_VAL : x.front();
  M.hi = curve->slope_hi > 0.0 ? HUGE_VAL : x.back();
  return M;
}

PhiModel PhiModel::tabulated_from_phi(const std::vector<double>& nodes,
                                      const std::vector<double>& phi_values, double tail_slope_lo,
                                      double tail_slope_hi) {
  std::vector<double> x = nodes, y = phi_values;
  check_nodes(x, y);
  for (size_t i = 0; i + 1 < y.size(); ++i)
    if (!(y[i] < y[i + 1])) throw ModelError("φ samples must be strictly increasing");
  insert_zero_node(x, y);
  anchor_at_zero(x, y);  // pin φ(0) = 0 exactly

  const auto d = pchip_slopes(x, y);
  auto curve = std::make_shared<TabulatedCurve>();
  const size_t n = x.size();
  curve->x = x;
  curve->phi_at_x = y;
  curve->c.resize(n - 1);
  curve->Phi_at_x.assign(n, 0.0);
  for (size_t i = 0; i + 1 < n; ++i) {
    const double h = x[i + 1] - x[i];
    const double delta = (y[i + 1] - y[i]) / h;
    curve->c[i] = {y[i], d[i], (3.0 * delta - 2.0 * d[i] - d[i + 1]) / h,
                   (d[i] + d[i + 1] - 2.0 * delta) / (h * h), 0.0};
    curve->Phi_at_x[i + 1] = curve->Phi_at_x[i] + poly_integral(curve->c[i], h);
  }
  anchor_at_zero(x, curve->Phi_at_x);
  curve->slope_lo = tail_slope_lo < 0.0 ? poly_deriv(curve->c.front(), 0.0) : tail_slope_lo;
  curve->slope_hi =
      tail_slope_hi < 0.0 ? poly_deriv(curve->c.back(), x[n - 1] - x[n - 2]) : tail_slope_hi;

  PhiModel M;
  M.kind = PhiKind::Tabulated;
  M.table = curve;
  M.lo = curve->slope_lo > 0.0 ? -HUGE_VAL : x.front();
  M.hi = curve->slope_hi > 0.0 ? HUGE_VAL : x.back();
  return M;
}

void PhiModel::validate() const {
  switch (kind) {
    case PhiKind::Biofilm:
      if (!(a >= 1.0)) throw ModelError("biofilm exponent a must satisfy a >= 1");
      if (!(b > 0.0)) throw ModelError("biofilm exponent b must satisfy b > 0");
      break;
    case PhiKind::PME:
      if (!(m > 1.0)) throw ModelError("PME exponent m must satisfy m > 1");
      break;
    case PhiKind::Tabulated:
      if (!table) throw ModelError("tabulated model has no table");
      break;
  }
}

// ---------------------------------------------------------------------------
// Evaluators

double eval_D(const PhiModel& model, double z) {
  check_inside(model, z, "eval_D");
  switch (model.kind) {
    case PhiKind::Biofilm: {
      const double s = std::abs(z);
      return std::pow(s, model.b) / std::pow(1.0 - s, model.a);
    }
    case PhiKind::PME:
      return model.m * std::pow(std::abs(z), model.m - 1.0);
    case PhiKind::Tabulated:
      return model.table->D(z);
  }
  throw ModelError("unreachable");
}

double eval_phi(const PhiModel& model, double rho) {
  check_inside(model, rho, "eval_phi");
  switch (model.kind) {
    case PhiKind::Biofilm: {
      const double s = std::abs(rho);
      const double v = biofilm_phi_pos(model.a, model.b, s);
      return rho < 0.0 ? -v : v;
    }
    case PhiKind::PME:
      return rho * std::pow(std::abs(rho), model.m - 1.0);
    case PhiKind::Tabulated:
      return model.table->phi(rho);
  }
  throw ModelError("unreachable");
}

double eval_Phi(const PhiModel& model, double rho) {
  check_inside(model, rho, "eval_Phi");
  switch (model.kind) {
    case PhiKind::Biofilm:
      return biofilm_Phi_pos(model.a, model.b, std::abs(rho));
    case PhiKind::PME:
      return std::pow(std::abs(rho), model.m + 1.0) / (model.m + 1.0);
    case PhiKind::Tabulated:
      return model.table->Phi(rho);
  }
  throw ModelError("unreachable");
}

namespace {

// Monotone bisection for β on [lo, hi] given φ(lo) <= w <= φ(hi), with a few
// Newton polish steps where D is informative.
double invert_monotone(const PhiModel& model, double w, double blo, double bhi) {
  double flo = eval_phi(model, blo) - w;
  double fhi = eval_phi(model, bhi) - w;
  if (flo > 0.0) return blo;
  if (fhi < 0.0) return bhi;
  for (int it = 0; it < 110 && bhi - blo > 0.0; ++it) {
    const double mid = 0.5 * (blo + bhi);
    if (mid == blo || mid == bhi) break;
    const double fm = eval_phi(model, mid) - w;
    if (fm == 0.0) return mid;
    if (fm < 0.0) {
      blo = mid;
      flo = fm;
    } else {
      bhi = mid;
      fhi = fm;
    }
  }
  double r = 0.5 * (blo + bhi);
  for (int it = 0; it < 3; ++it) {
    const double D = eval_D(model, r);
    if (!(D > 0.0)) break;
    const double step = (eval_phi(model, r) - w) / D;
    const double next = std::clamp(r - step, blo, bhi);
    if (next == r) break;
    r = next;
  }
  return r;
}

}  // namespace

double eval_beta(const PhiModel& model, double w) {
  if (!std::isfinite(w)) throw DomainError("eval_beta: non-finite argument");
  if (w == 0.0) return 0.0;
  switch (model.kind) {
    case PhiKind::PME:
      return (w < 0.0 ? -1.0 : 1.0) * std::pow(std::abs(w), 1.0 / model.m);
    case PhiKind::Biofilm: {
      const double edge = 1.0 - kEndpointGuard;
      const double wmax = biofilm_phi_pos(model.a, model.b, edge);
      const double aw = std::abs(w);
      const double r = aw >= wmax ? edge : invert_monotone(model, aw, 0.0, edge);
      return w < 0.0 ? -r : r;
    }
    case PhiKind::Tabulated: {
      const auto& tc = *model.table;
      if (w < tc.phi_at_x.front()) {
        if (tc.slope_lo > 0.0) return tc.x.front() + (w - tc.phi_at_x.front()) / tc.slope_lo;
        throw RangeError("eval_beta: argument below the range of the tabulated φ");
      }
      if (w > tc.phi_at_x.back()) {
        if (tc.slope_hi > 0.0) return tc.x.back() + (w - tc.phi_at_x.back()) / tc.slope_hi;
        throw RangeError("eval_beta: argument above the range of the tabulated φ");
      }
      // Stay clear of the endpoint guard band when the interval is bounded.
      const double blo = std::isfinite(model.lo) ? model.lo + kEndpointGuard : tc.x.front();
      const double bhi = std::isfinite(model.hi) ? model.hi - kEndpointGuard : tc.x.back();
      return invert_monotone(model, w, blo, bhi);
    }
  }
  throw ModelError("unreachable");
}

double eval_beta_log(const PhiModel& model, double ln_w) {
  switch (model.kind) {
    case PhiKind::PME:
      return ln_w / model.m;
    case PhiKind::Biofilm: {
      // φ(ρ) = ρ^{b+1}/(b+1) (1 + O(ρ)) near 0, so for tiny w
      //   ln β(w) = (ln w + ln(b+1)) / (b+1) up to relative O(β).
      const double rho_small = 1e-8;
      const double w_small = biofilm_phi_pos(model.a, model.b, rho_small);
      if (ln_w <= std::log(w_small)) return (ln_w + std::log(model.b + 1.0)) / (model.b + 1.0);
      const double edge = 1.0 - kEndpointGuard;
      const double wmax = biofilm_phi_pos(model.a, model.b, edge);
      if (ln_w >= std::log(wmax)) return std::log(edge);
      return std::log(eval_beta(model, std::exp(ln_w)));
    }
    case PhiKind::Tabulated: {
      const auto& tc = *model.table;
      // First two nodes with positive coordinate and positive φ value; their
      // log-log secant extrapolates β below the table (exact for pure powers).
      size_t i1 = 0;
      while (i1 < tc.x.size() && !(tc.x[i1] > 0.0 && tc.phi_at_x[i1] > 0.0)) ++i1;
      if (i1 + 1 >= tc.x.size())
        throw ModelError("eval_beta_log: tabulated φ needs two positive nodes");
      const size_t i2 = i1 + 1;
      const double lphi1 = std::log(tc.phi_at_x[i1]);
      if (ln_w < lphi1) {
        const double slope =
            (std::log(tc.x[i2]) - std::log(tc.x[i1])) / (std::log(tc.phi_at_x[i2]) - lphi1);
        return std::log(tc.x[i1]) + slope * (ln_w - lphi1);
      }
      if (ln_w > 700.0) {
        if (tc.slope_hi > 0.0) return ln_w - std::log(tc.slope_hi);
        throw RangeError("eval_beta_log: argument above the range of the tabulated φ");
      }
      return std::log(eval_beta(model, std::exp(ln_w)));
    }
  }
  throw ModelError("unreachable");
}

// ---------------------------------------------------------------------------
// Admissibility checks

GrowthCheck check_growth_alpha(const PhiModel& model, double alpha, double j_lo, double j_hi) {
  if (!(j_lo < j_hi)) throw DomainError("check_growth_alpha: empty interval");
  const int kUniform = 5000, kLog = 5000;
  const double mag_hi = std::max(std::abs(j_lo), std::abs(j_hi));
  const double bulk_threshold = 1e-3 * mag_hi;

  double C_J = 0.0, C_bulk = 0.0;
  auto visit = [&](double r) {
    if (std::abs(r) < 1e-300 || r < j_lo || r > j_hi) return;
    const double ratio = std::abs(eval_phi(model, r)) / std::pow(std::abs(r), alpha);
    C_J = std::max(C_J, ratio);
    if (std::abs(r) >= bulk_threshold) C_bulk = std::max(C_bulk, ratio);
  };
  for (int i = 0; i < kUniform; ++i) visit(j_lo + (j_hi - j_lo) * (i + 0.5) / kUniform);
  for (int i = 0; i < kLog; ++i) {
    const double mag = mag_hi * std::pow(10.0, -12.0 + 12.0 * i / (kLog - 1.0));
    visit(mag);
    visit(-mag);
  }
  const bool holds = C_bulk > 0.0 && C_J <= 10.0 * C_bulk;
  return {holds, C_J};
}

bool check_divergence_condition(const PhiModel& model, int d, double R, int budget) {
  if (d < 3) throw DomainError("divergence condition requires d >= 3");
  if (!(R > 0.0)) throw DomainError("divergence condition requires R > 0");
  if (budget < 2) throw DomainError("divergence condition requires budget >= 2");

  // Work with s = ln ρ: the integrand becomes exp(d·s + ln β(e^{-(d-2)s})),
  // accumulated per octave via log-sum-exp so overflow never occurs even for
  // budgets of hundreds of doublings.
  const double s0 = std::log(R);
  const double ln2 = std::log(2.0);
  auto logaddexp = [](double x, double y) {
    if (x == -HUGE_VAL) return y;
    if (y == -HUGE_VAL) return x;
    const double m = std::max(x, y);
    return m + std::log1p(std::exp(std::min(x, y) - m));
  };

  double lnS = -HUGE_VAL, lnS_prev = -HUGE_VAL;
  for (int j = 1; j <= budget; ++j) {
    const double sa = s0 + (j - 1) * ln2;
    const double sb = s0 + j * ln2;
    const double mid = 0.5 * (sa + sb), half = 0.5 * (sb - sa);
    double lnI = -HUGE_VAL;
    for (int i = 0; i < 8; ++i) {
      for (double sgn : {-1.0, 1.0}) {
        const double s = mid + sgn * half * kGL16X[i];
        const double g = d * s + eval_beta_log(model, -(d - 2.0) * s);
        lnI = logaddexp(lnI, std::log(kGL16W[i] * half) + g);
      }
    }
    lnS_prev = lnS;
    lnS = logaddexp(lnS, lnI);
  }
  if (lnS == -HUGE_VAL) return false;
  const double rel_increment = lnS_prev == -HUGE_VAL ? 1.0 : 1.0 - std::exp(lnS_prev - lnS);
  return rel_increment > 1e-3;
}

// ---------------------------------------------------------------------------
// Smooth approximation

double mollifier(double s) {
  static const double Z = [] {
    return gl_panels([](double t) { return std::exp(-1.0 / (1.0 - t * t)); }, -1.0, 1.0, 128);
  }();
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s * s)) / Z;
}

std::pair<double, double> smooth_approx_band(const PhiModel& model, int k) {
  const double f = std::pow(2.0, -k);
  const double ak = std::isfinite(model.lo) ? model.lo * (1.0 - f) : -std::pow(2.0, k);
  const double bk = std::isfinite(model.hi) ? model.hi * (1.0 - f) : std::pow(2.0, k);
  return {ak, bk};
}

PhiModel build_smooth_approx(const PhiModel& model, const SmoothApproxParams& params) {
  model.validate();
  if (params.k < 1) throw ConfigError("smooth approximation index k must be >= 1");
  if (params.mollifier_resolution < 16)
    throw ConfigError("mollifier_resolution must be >= 16");
  if (params.coarse_nodes < 16) throw ConfigError("coarse_nodes must be >= 16");

  const auto [ak, bk] = params.custom_band ? *params.custom_band : smooth_approx_band(model, params.k);
  if (!(ak < 0.0 && 0.0 < bk)) throw ConfigError("clipping band must contain 0");
  const double r = std::pow(2.0, -params.k);
  const double floor_k = r;
  if (std::isfinite(model.lo) && ak - r < model.lo)
    throw ConfigError("scaled mollifier support crosses the lower interval endpoint");
  if (std::isfinite(model.hi) && bk + r > model.hi)
    throw ConfigError("scaled mollifier support crosses the upper interval endpoint");

  const double table_lo = ak - r, table_hi = bk + r;

  // Node set: coarse uniform grid plus bands of spacing r/32 around the
  // clipping edges and the origin, where D_k varies on the mollifier scale.
  std::vector<double> nodes;
  for (int i = 0; i <= params.coarse_nodes; ++i)
    nodes.push_back(table_lo + (table_hi - table_lo) * i / params.coarse_nodes);
  for (double center : {ak, 0.0, bk}) {
    const double step = r / 32.0;
    for (int i = -40; i <= 40; ++i) {
      const double z = center + i * step;
      if (z > table_lo && z < table_hi) nodes.push_back(z);
    }
  }
  nodes.push_back(0.0);
  nodes.push_back(table_lo);
  nodes.push_back(table_hi);
  std::sort(nodes.begin(), nodes.end());
  const double dedupe = (table_hi - table_lo) * 1e-13;
  std::vector<double> xs;
  for (double z : nodes) {
    if (xs.empty() || z - xs.back() > dedupe) {
      xs.push_back(z);
    } else if (z == 0.0 && xs.back() != 0.0) {
      xs.back() = 0.0;
    }
  }

  // D_k(z) = 2^{-k} + ∫ η(σ) (1_{(ak,bk)} D)(z - rσ) dσ with the σ-domain
  // split at the images of the clipping edges and the origin, so every
  // quadrature piece is smooth. Positive weights on a nonnegative integrand
  // keep D_k >= 2^{-k} exactly.
  const int panels = (params.mollifier_resolution + 15) / 16;
  std::vector<double> Dk(xs.size());
  for (size_t idx = 0; idx < xs.size(); ++idx) {
    const double z = xs[idx];
    std::vector<double> cuts = {-1.0, 1.0};
    for (double y : {ak, 0.0, bk}) {
      const double sigma = (z - y) / r;
      if (sigma > -1.0 && sigma < 1.0) cuts.push_back(sigma);
    }
    std::sort(cuts.begin(), cuts.end());
    double conv = 0.0;
    for (size_t p = 0; p + 1 < cuts.size(); ++p) {
      const double mid = 0.5 * (cuts[p] + cuts[p + 1]);
      const double ymid = z - r * mid;
      if (!(ymid > ak && ymid < bk)) continue;  // indicator kills this piece
      conv += gl_panels(
          [&](double sigma) { return mollifier(sigma) * eval_D(model, z - r * sigma); }, cuts[p],
          cuts[p + 1], panels);
    }
    Dk[idx] = floor_k + conv;
  }

  return PhiModel::tabulated_from_D(xs, Dk, floor_k, floor_k);
}

}  // namespace porodyn
