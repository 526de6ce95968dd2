#include "sepbic/tdse2d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sepbic/errors.hpp"

namespace sepbic {

namespace {

constexpr Complex kI{0.0, 1.0};

double layer_depth(double x, const Grid1D& grid, double width) {
  const double inner = grid.x_max() - width;
  const double d = std::abs(x) - inner;
  return d > 0.0 ? d : 0.0;
}

}  // namespace

std::vector<double> absorber_profile(const Grid1D& grid, double width, double strength) {
  std::vector<double> w(grid.size(), 0.0);
  if (width <= 0.0 || strength == 0.0) return w;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double u = std::min(layer_depth(grid[i], grid, width) / width, 1.0);
    w[i] = strength * u * u * u * u;
  }
  return w;
}

double discrete_momentum(KineticConvention convention, double spacing, double e) {
  const double c = convention.coefficient();
  const double arg = 1.0 - e * spacing * spacing / (2.0 * c);
  if (e <= 0.0 || arg <= -1.0) throw RangeError("energy outside the discrete band");
  return std::acos(arg) / spacing;
}

double absorber_reflection(KineticConvention convention, double spacing, double width, double strength, double k) {
  const double c = convention.coefficient();
  const double h = spacing;
  const double e = 2.0 * c * (1.0 - std::cos(k * h)) / (h * h);
  const auto m = static_cast<std::size_t>(std::floor(width / h + 1e-9));
  // Backward recursion from the wall node m + 1 (psi = 0) into the free region.
  Complex next{0.0, 0.0};
  Complex cur{1.0, 0.0};
  for (std::size_t j = m + 1; j-- > 0;) {
    const double u = std::min(static_cast<double>(j) * h / width, 1.0);
    const double w = strength * u * u * u * u;
    const Complex prev = 2.0 * cur - next - (h * h / c) * (e + kI * w) * cur;
    next = cur;
    cur = prev;
  }
  // cur = psi_{-1}, next = psi_0.
  const Complex ph = std::exp(kI * k * h);
  const Complex a = (next * ph - cur) / (ph - 1.0 / ph);
  const Complex b = next - a;
  return std::norm(b / a);
}

ReflectionResult tune_absorber(KineticConvention convention, double spacing, double width,
                               const std::vector<double>& momenta) {
  if (momenta.empty()) throw ValidationError("tune_absorber needs at least one momentum");
  auto worst = [&](double log_s) {
    double r = 0.0;
    for (double k : momenta) r = std::max(r, absorber_reflection(convention, spacing, width, std::exp(log_s), k));
    return r;
  };
  const double lo = std::log(1e-4), hi = std::log(1e3);
  const int n = 141;
  int best = 0;
  double best_r = worst(lo);
  for (int i = 1; i < n; ++i) {
    const double r = worst(lo + (hi - lo) * i / (n - 1));
    if (r < best_r) best_r = r, best = i;
  }
  double a = lo + (hi - lo) * std::max(best - 1, 0) / (n - 1);
  double b = lo + (hi - lo) * std::min(best + 1, n - 1) / (n - 1);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = worst(x1), f2 = worst(x2);
  for (int it = 0; it < 60; ++it) {
    if (f1 < f2) {
      b = x2, x2 = x1, f2 = f1, x1 = b - g * (b - a), f1 = worst(x1);
    } else {
      a = x1, x1 = x2, f1 = f2, x2 = a + g * (b - a), f2 = worst(x2);
    }
  }
  const double s = f1 < f2 ? x1 : x2;
  return {std::exp(s), std::min(f1, f2)};
}

double smooth_ramp(double t, double duration) {
  if (duration <= 0.0 || t >= duration) return 1.0;
  if (t <= 0.0) return 0.0;
  const double u = t / duration;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

void PropagationSetup::validate() const {
  if (grid_x.size() < 3 || grid_y.size() < 3) throw ValidationError("TDSE grids need at least 3 points");
  if (potential_x.size() != grid_x.size() || potential_y.size() != grid_y.size())
    throw ValidationError("TDSE potential sizes do not match the grids");
  const bool has_dv = perturbation.nx() != 0 || perturbation.ny() != 0;
  if (has_dv && !(perturbation.grid_x().same_as(grid_x) && perturbation.grid_y().same_as(grid_y)))
    throw ValidationError("perturbation field is not on the propagation grid");
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  if (sample_every == 0) throw ValidationError("sample_every must be positive");
  if (ramp_duration < 0.0) throw ValidationError("ramp duration must be non-negative");
  if (!(detector_x > 0.0) || !(detector_y > 0.0)) throw ValidationError("detector positions must be positive");
  const double free_x = absorber.enabled ? grid_x.x_max() - absorber.width_x : grid_x.x_max();
  const double free_y = absorber.enabled ? grid_y.x_max() - absorber.width_y : grid_y.x_max();
  if (detector_x + grid_x.spacing() >= free_x || detector_y + grid_y.spacing() >= free_y)
    throw ValidationError("detectors must lie strictly inside the absorber-free region");
  if (-grid_x.x_min() < detector_x || -grid_y.x_min() < detector_y)
    throw ValidationError("detector box exceeds the grid");
}

bool PropagationSetup::within_accuracy_guard() const {
  const double h = std::min(grid_x.spacing(), grid_y.spacing());
  return dt < h * h / 2.0;
}

void apply_default_geometry(PropagationSetup& setup) {
  setup.absorber.width_x = 0.25 * setup.grid_x.x_max();
  setup.absorber.width_y = 0.25 * setup.grid_y.x_max();
  setup.detector_x = 0.70 * setup.grid_x.x_max();
  setup.detector_y = 0.70 * setup.grid_y.x_max();
}

DetectorBox detector_box(const PropagationSetup& setup) {
  DetectorBox box;
  box.ix_hi = setup.grid_x.nearest(setup.detector_x);
  box.ix_lo = setup.grid_x.nearest(-setup.detector_x);
  box.iy_hi = setup.grid_y.nearest(setup.detector_y);
  box.iy_lo = setup.grid_y.nearest(-setup.detector_y);
  if (box.ix_lo == 0 || box.iy_lo == 0 || box.ix_hi + 1 >= setup.grid_x.size() ||
      box.iy_hi + 1 >= setup.grid_y.size() || box.ix_lo >= box.ix_hi || box.iy_lo >= box.iy_hi)
    throw ValidationError("detector box needs one node of margin inside the grid");
  return box;
}

namespace {

double trapezoid_weight(std::size_t k, std::size_t lo, std::size_t hi) { return k == lo || k == hi ? 0.5 : 1.0; }

}  // namespace

double flux_through_line(const ComplexField2D& psi, const DetectorBox& box, Detector side,
                         KineticConvention convention) {
  const double c = convention.coefficient();
  const double hx = psi.grid_x().spacing(), hy = psi.grid_y().spacing();
  double sum = 0.0;
  if (side == Detector::plus_x || side == Detector::minus_x) {
    const std::size_t i = side == Detector::plus_x ? box.ix_hi : box.ix_lo;
    const double sign = side == Detector::plus_x ? 1.0 : -1.0;
    for (std::size_t j = box.iy_lo; j <= box.iy_hi; ++j) {
      const double jl = std::imag(std::conj(psi(i - 1, j)) * psi(i, j));
      const double jr = std::imag(std::conj(psi(i, j)) * psi(i + 1, j));
      sum += trapezoid_weight(j, box.iy_lo, box.iy_hi) * 0.5 * (jl + jr);
    }
    return sign * sum * 2.0 * c / hx * hy;
  }
  const std::size_t j = side == Detector::plus_y ? box.iy_hi : box.iy_lo;
  const double sign = side == Detector::plus_y ? 1.0 : -1.0;
  for (std::size_t i = box.ix_lo; i <= box.ix_hi; ++i) {
    const double jl = std::imag(std::conj(psi(i, j - 1)) * psi(i, j));
    const double jr = std::imag(std::conj(psi(i, j)) * psi(i, j + 1));
    sum += trapezoid_weight(i, box.ix_lo, box.ix_hi) * 0.5 * (jl + jr);
  }
  return sign * sum * 2.0 * c / hy * hx;
}

double region_norm(const ComplexField2D& psi, const DetectorBox& box) {
  double sum = 0.0;
  for (std::size_t j = box.iy_lo; j <= box.iy_hi; ++j) {
    const double wj = trapezoid_weight(j, box.iy_lo, box.iy_hi);
    for (std::size_t i = box.ix_lo; i <= box.ix_hi; ++i)
      sum += wj * trapezoid_weight(i, box.ix_lo, box.ix_hi) * std::norm(psi(i, j));
  }
  return sum * psi.grid_x().spacing() * psi.grid_y().spacing();
}

double grid_norm(const ComplexField2D& psi) {
  double sum = 0.0;
  for (const auto& v : psi.data()) sum += std::norm(v);
  return sum * psi.grid_x().spacing() * psi.grid_y().spacing();
}

Propagator::Propagator(PropagationSetup setup) : setup_(std::move(setup)) {
  setup_.validate();
  const auto& ab = setup_.absorber;
  wx_ = ab.enabled ? absorber_profile(setup_.grid_x, ab.width_x, ab.strength_x)
                   : std::vector<double>(setup_.grid_x.size(), 0.0);
  wy_ = ab.enabled ? absorber_profile(setup_.grid_y, ab.width_y, ab.strength_y)
                   : std::vector<double>(setup_.grid_y.size(), 0.0);
  has_perturbation_ = setup_.perturbation.nx() != 0;
  refresh(has_perturbation_ ? smooth_ramp(0.5 * setup_.dt, setup_.ramp_duration) : 0.0);
}

std::vector<Complex> Propagator::diag_x(std::size_t j, double strength) const {
  const double c = setup_.convention.coefficient();
  const double h = setup_.grid_x.spacing();
  std::vector<Complex> a(setup_.grid_x.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    double v = 2.0 * c / (h * h) + setup_.potential_x[i];
    if (strength != 0.0) v += 0.5 * strength * setup_.perturbation(i, j);
    a[i] = Complex(v, -wx_[i]);
  }
  return a;
}

std::vector<Complex> Propagator::diag_y(std::size_t i, double strength) const {
  const double c = setup_.convention.coefficient();
  const double h = setup_.grid_y.spacing();
  std::vector<Complex> a(setup_.grid_y.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    double v = 2.0 * c / (h * h) + setup_.potential_y[j];
    if (strength != 0.0) v += 0.5 * strength * setup_.perturbation(i, j);
    a[j] = Complex(v, -wy_[j]);
  }
  return a;
}

namespace {

// Thomas factors of (1 + i theta A) with A = tridiag(b, a_k, b).
void factor_line(const std::vector<Complex>& a, double b, double theta, Complex* diag, Complex* cp, Complex* inv,
                 std::size_t stride) {
  const Complex off = kI * theta * b;
  Complex prev_cp{0.0, 0.0};
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Complex den = 1.0 + kI * theta * a[k] - off * prev_cp;
    const Complex id = 1.0 / den;
    diag[k * stride] = a[k];
    inv[k * stride] = id;
    cp[k * stride] = prev_cp = off * id;
  }
}

}  // namespace

void Propagator::refresh(double strength) {
  if (strength == cached_strength_) return;
  cached_strength_ = strength;
  const std::size_t nx = setup_.grid_x.size(), ny = setup_.grid_y.size();
  const double c = setup_.convention.coefficient();
  const double bx = -c / (setup_.grid_x.spacing() * setup_.grid_x.spacing());
  const double by = -c / (setup_.grid_y.spacing() * setup_.grid_y.spacing());
  const bool per_line = strength != 0.0;
  fx_.per_line = fy_.per_line = per_line;
  const std::size_t sx = per_line ? nx * ny : nx, sy = per_line ? nx * ny : ny;
  for (auto* f : {&fx_}) f->diag.resize(sx), f->cp.resize(sx), f->inv.resize(sx);
  fy_.diag.resize(sy), fy_.cp.resize(sy), fy_.inv.resize(sy);
  if (!per_line) {
    factor_line(diag_x(0, 0.0), bx, 0.25 * setup_.dt, fx_.diag.data(), fx_.cp.data(), fx_.inv.data(), 1);
    factor_line(diag_y(0, 0.0), by, 0.5 * setup_.dt, fy_.diag.data(), fy_.cp.data(), fy_.inv.data(), 1);
    return;
  }
  for (std::size_t j = 0; j < ny; ++j)
    factor_line(diag_x(j, strength), bx, 0.25 * setup_.dt, fx_.diag.data() + j * nx, fx_.cp.data() + j * nx,
                fx_.inv.data() + j * nx, 1);
  for (std::size_t i = 0; i < nx; ++i)
    factor_line(diag_y(i, strength), by, 0.5 * setup_.dt, fy_.diag.data() + i, fy_.cp.data() + i,
                fy_.inv.data() + i, nx);
}

// Lines are swept in blocks so independent Thomas recursions interleave.
void Propagator::sweep_x(ComplexField2D& psi, double theta, const AxisFactors& f) const {
  constexpr std::size_t kBlock = 8;
  const std::size_t nx = psi.nx(), ny = psi.ny();
  const double c = setup_.convention.coefficient();
  const Complex off = kI * theta * (-c / (setup_.grid_x.spacing() * setup_.grid_x.spacing()));
  const Complex ith = kI * theta;
  Complex* p = psi.data().data();
  auto& r = scratch_;
  r.resize(kBlock * nx);
  for (std::size_t j0 = 0; j0 < ny; j0 += kBlock) {
    const std::size_t nb = std::min(kBlock, ny - j0);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t row = (j0 + b) * nx;
        const std::size_t fk = f.per_line ? row + i : i;
        const Complex* q = p + row;
        const Complex n = (i > 0 ? q[i - 1] : Complex{}) + (i + 1 < nx ? q[i + 1] : Complex{});
        const Complex rhs = q[i] - ith * f.diag[fk] * q[i] - off * n;
        const Complex prev = i > 0 ? r[(i - 1) * kBlock + b] : Complex{};
        r[i * kBlock + b] = (rhs - off * prev) * f.inv[fk];
      }
    for (std::size_t b = 0; b < nb; ++b) p[(j0 + b) * nx + nx - 1] = r[(nx - 1) * kBlock + b];
    for (std::size_t i = nx - 1; i-- > 0;)
      for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t row = (j0 + b) * nx;
        const std::size_t fk = f.per_line ? row + i : i;
        p[row + i] = r[i * kBlock + b] - f.cp[fk] * p[row + i + 1];
      }
  }
}

void Propagator::sweep_y(ComplexField2D& psi, double theta, const AxisFactors& f) const {
  const std::size_t nx = psi.nx(), ny = psi.ny();
  const double c = setup_.convention.coefficient();
  const Complex off = kI * theta * (-c / (setup_.grid_y.spacing() * setup_.grid_y.spacing()));
  const Complex ith = kI * theta;
  Complex* p = psi.data().data();
  auto& r = scratch_;
  r.resize(nx * ny);
  // The right-hand side of row j needs the old rows j - 1 and j + 1, so the
  // previous old row is kept aside while r overwrites nothing in p.
  for (std::size_t j = 0; j < ny; ++j) {
    const Complex* q = p + j * nx;
    Complex* rj = r.data() + j * nx;
    const Complex* rp = j > 0 ? rj - nx : nullptr;
    if (f.per_line) {
      const Complex* a = f.diag.data() + j * nx;
      const Complex* inv = f.inv.data() + j * nx;
      for (std::size_t i = 0; i < nx; ++i) {
        Complex n = j + 1 < ny ? q[i + nx] : Complex{};
        if (j > 0) n += q[i - nx];
        Complex rhs = q[i] - ith * a[i] * q[i] - off * n;
        if (rp) rhs -= off * rp[i];
        rj[i] = rhs * inv[i];
      }
    } else {
      const Complex d = Complex(1.0, 0.0) - ith * f.diag[j];
      const Complex inv = f.inv[j];
      for (std::size_t i = 0; i < nx; ++i) {
        Complex n = j + 1 < ny ? q[i + nx] : Complex{};
        if (j > 0) n += q[i - nx];
        Complex rhs = d * q[i] - off * n;
        if (rp) rhs -= off * rp[i];
        rj[i] = rhs * inv;
      }
    }
  }
  std::copy(r.begin() + static_cast<std::ptrdiff_t>((ny - 1) * nx), r.end(), p + (ny - 1) * nx);
  for (std::size_t j = ny - 1; j-- > 0;) {
    Complex* q = p + j * nx;
    const Complex* rj = r.data() + j * nx;
    if (f.per_line) {
      const Complex* cp = f.cp.data() + j * nx;
      for (std::size_t i = 0; i < nx; ++i) q[i] = rj[i] - cp[i] * q[i + nx];
    } else {
      const Complex cp = f.cp[j];
      for (std::size_t i = 0; i < nx; ++i) q[i] = rj[i] - cp * q[i + nx];
    }
  }
}

void Propagator::step(ComplexField2D& psi, double t) {
  if (psi.nx() != setup_.grid_x.size() || psi.ny() != setup_.grid_y.size())
    throw ValidationError("wavefunction is not on the propagation grid");
  refresh(has_perturbation_ ? smooth_ramp(t + 0.5 * setup_.dt, setup_.ramp_duration) : 0.0);
  sweep_x(psi, 0.25 * setup_.dt, fx_);
  sweep_y(psi, 0.5 * setup_.dt, fy_);
  sweep_x(psi, 0.25 * setup_.dt, fx_);
}

ComplexField2D Propagator::time_derivative(const ComplexField2D& psi, double t) const {
  const std::size_t nx = psi.nx(), ny = psi.ny();
  const double c = setup_.convention.coefficient();
  const double hx = setup_.grid_x.spacing(), hy = setup_.grid_y.spacing();
  const double s = has_perturbation_ ? smooth_ramp(t, setup_.ramp_duration) : 0.0;
  ComplexField2D out(psi.grid_x(), psi.grid_y());
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      const Complex v = psi(i, j);
      const Complex lap_x = (i > 0 ? psi(i - 1, j) : Complex{}) + (i + 1 < nx ? psi(i + 1, j) : Complex{}) - 2.0 * v;
      const Complex lap_y = (j > 0 ? psi(i, j - 1) : Complex{}) + (j + 1 < ny ? psi(i, j + 1) : Complex{}) - 2.0 * v;
      double pot = setup_.potential_x[i] + setup_.potential_y[j];
      if (s != 0.0) pot += s * setup_.perturbation(i, j);
      const Complex hpsi = -c * (lap_x / (hx * hx) + lap_y / (hy * hy)) + Complex(pot, -(wx_[i] + wy_[j])) * v;
      out(i, j) = -kI * hpsi;
    }
  return out;
}

double RadiationRecord::flux_x() const {
  return cumulative_flux[0].empty() ? 0.0 : cumulative_flux[0].back() + cumulative_flux[1].back();
}
double RadiationRecord::flux_y() const {
  return cumulative_flux[2].empty() ? 0.0 : cumulative_flux[2].back() + cumulative_flux[3].back();
}
double RadiationRecord::flux_total() const { return flux_x() + flux_y(); }

namespace {

Complex overlap(const ComplexField2D& a, const ComplexField2D& b) {
  Complex s{0.0, 0.0};
  for (std::size_t k = 0; k < a.data().size(); ++k) s += std::conj(a.data()[k]) * b.data()[k];
  return s * a.grid_x().spacing() * a.grid_y().spacing();
}

}  // namespace

RadiationRecord propagate(const PropagationSetup& setup, ComplexField2D& psi, const ComplexField2D& reference) {
  Propagator prop(setup);
  if (reference.nx() != psi.nx() || reference.ny() != psi.ny())
    throw ValidationError("reference state is not on the propagation grid");
  const DetectorBox box = detector_box(setup);
  RadiationRecord rec;
  const double n0 = region_norm(psi, box);
  std::array<double, 4> flux{}, cum{};
  auto fluxes = [&] {
    for (int s = 0; s < 4; ++s) flux[s] = flux_through_line(psi, box, static_cast<Detector>(s), setup.convention);
  };
  auto sample = [&](double t) {
    const double interior = region_norm(psi, box);
    const double total = grid_norm(psi);
    if (!std::isfinite(total)) throw NumericalError("wavefunction became non-finite at t = " + std::to_string(t));
    rec.times.push_back(t);
    rec.survival.push_back(std::norm(overlap(reference, psi)));
    rec.interior_norm.push_back(interior);
    rec.total_norm.push_back(total);
    double out = 0.0;
    for (int s = 0; s < 4; ++s) rec.cumulative_flux[s].push_back(cum[s]), out += cum[s];
    rec.max_bookkeeping_error = std::max(rec.max_bookkeeping_error, std::abs(interior + out - n0));
  };
  fluxes();
  sample(0.0);
  for (std::size_t n = 0; n < setup.n_steps; ++n) {
    const double t = static_cast<double>(n) * setup.dt;
    const auto before = flux;
    prop.step(psi, t);
    fluxes();
    for (int s = 0; s < 4; ++s) cum[s] += 0.5 * setup.dt * (before[s] + flux[s]);
    if ((n + 1) % setup.sample_every == 0 || n + 1 == setup.n_steps) sample(t + setup.dt);
  }
  const double total = rec.flux_total();
  rec.directionality = total > 0.0 ? rec.flux_x() / total : 0.0;
  const double tol = 1e-9 + 1e-6 * std::abs(total);
  for (int s = 0; s < 4; ++s)
    if (cum[s] < -tol) rec.fluxes_nonnegative = false;
  return rec;
}

DecayFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& survival,
                        double exclude_fraction) {
  if (times.size() != survival.size()) throw ValidationError("fit_decay_rate: size mismatch");
  const auto first = static_cast<std::size_t>(std::floor(exclude_fraction * static_cast<double>(times.size())));
  double st = 0, sl = 0, stt = 0, stl = 0;
  std::size_t n = 0;
  for (std::size_t k = first; k < times.size(); ++k) {
    if (!(survival[k] > 0.0)) continue;
    const double l = std::log(survival[k]);
    st += times[k], sl += l, stt += times[k] * times[k], stl += times[k] * l;
    ++n;
  }
  if (n < 2) throw NumericalError("fit_decay_rate: fewer than two usable samples");
  const double dn = static_cast<double>(n);
  const double den = dn * stt - st * st;
  if (den <= 0.0) throw NumericalError("fit_decay_rate: degenerate time samples");
  const double slope = (dn * stl - st * sl) / den;
  DecayFit fit;
  fit.gamma = -slope;
  fit.intercept = (sl - slope * st) / dn;
  fit.points = n;
  double ss = 0.0;
  for (std::size_t k = first; k < times.size(); ++k) {
    if (!(survival[k] > 0.0)) continue;
    const double r = std::log(survival[k]) - (fit.intercept + slope * times[k]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / dn);
  const double span = std::abs(slope) * (times.back() - times[first]);
  fit.quality_warning = n < 5 || fit.gamma <= 0.0 || fit.residual > 0.1 * std::max(span, 1e-300);
  return fit;
}

ComplexField2D product_field(const Grid1D& from_x, const std::vector<double>& fx, const Grid1D& from_y,
                             const std::vector<double>& fy, const Grid1D& to_x, const Grid1D& to_y) {
  const auto ax = from_x.same_as(to_x) ? fx : interpolate(from_x, fx, to_x);
  const auto ay = from_y.same_as(to_y) ? fy : interpolate(from_y, fy, to_y);
  ComplexField2D psi(to_x, to_y);
  for (std::size_t j = 0; j < ay.size(); ++j)
    for (std::size_t i = 0; i < ax.size(); ++i) psi(i, j) = ax[i] * ay[j];
  const double n = grid_norm(psi);
  if (!(n > 0.0)) throw ValidationError("product state vanishes on the target grid");
  const double s = 1.0 / std::sqrt(n);
  for (auto& v : psi.data()) v *= s;
  return psi;
}

}  // namespace sepbic
