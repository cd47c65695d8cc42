#pragma once

// Regularized GLSM solves and the transmission-eigenvalue indicator
// I(k) = int_{Omega_0} (F~# g_z, g_z) dz, plus peak detection on I(k).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "artbg/artificial_background.hpp"
#include "artbg/domain.hpp"
#include "artbg/errors.hpp"
#include "artbg/farfield.hpp"
#include "artbg/linalg.hpp"

namespace artbg {

enum class PointSourceSign {
  kDerived,  // gamma e^{-ik theta.z}: farfield of (i/4) H0(k|x - z|)
  kLiteral,  // e^{+ik theta.z} with no constant
};

inline ComplexVector point_source_rhs(Point z, double k, const DirectionGrid& obs,
                                      PointSourceSign sign = PointSourceSign::kDerived) {
  ComplexVector phi(obs.size());
  for (int s = 0; s < obs.size(); ++s) {
    const double ph = k * dot(obs.direction(s), z);
    phi(s) = sign == PointSourceSign::kDerived ? FarfieldConvention::gamma(k) * std::exp(-kI * ph)
                                               : std::exp(kI * ph);
  }
  return phi;
}

inline ComplexMatrix point_source_rhs(const std::vector<Point>& zs, double k, const DirectionGrid& obs,
                                      PointSourceSign sign = PointSourceSign::kDerived) {
  ComplexMatrix phi(obs.size(), static_cast<Eigen::Index>(zs.size()));
  for (std::size_t j = 0; j < zs.size(); ++j) phi.col(static_cast<Eigen::Index>(j)) = point_source_rhs(zs[j], k, obs, sign);
  return phi;
}

struct TikhonovSolveResult {
  ComplexVector density;
  double penalty = 0.0;  // (F~# g, g) in L2 of the circle
  double misfit = 0.0;   // ||F_art g - phi||^2
  double alpha = 0.0;
};

/// Exact minimizer of J(g) = alpha (T g, g) + ||F g - phi||^2 for a fixed
/// operator pair, factored once and reused for every right-hand side.
/// F and T are discretized operators; `weight` is the circle quadrature weight.
class TikhonovSolver {
 public:
  TikhonovSolver(ComplexMatrix f, ComplexMatrix t, double alpha, double weight)
      : f_(std::move(f)), t_(std::move(t)), alpha_(alpha), weight_(weight) {
    if (!(alpha > 0.0)) throw InvalidArgument("Tikhonov parameter must be > 0");
    if (f_.cols() != t_.rows() || t_.rows() != t_.cols())
      throw InvalidArgument("Tikhonov operators have incompatible dimensions");
    const double ridge = 1e-12 * t_.trace().real() / static_cast<double>(t_.rows());
    ComplexMatrix normal = alpha_ * t_ + f_.adjoint() * f_;
    normal.diagonal().array() += ridge;
    normal = 0.5 * (normal + normal.adjoint()).eval();
    zero_ = normal.cwiseAbs().maxCoeff() == 0.0;
    if (!zero_) {
      fact_.compute(normal);
      if (fact_.info() != Eigen::Success)
        throw SolverFailure("Tikhonov normal matrix factorization failed (alpha=" + std::to_string(alpha_) + ")");
    }
  }

  double alpha() const { return alpha_; }

  ComplexMatrix densities(const ComplexMatrix& phi) const {
    if (zero_) return ComplexMatrix::Zero(f_.cols(), phi.cols());
    return fact_.solve(f_.adjoint() * phi);
  }

  TikhonovSolveResult solve(const ComplexVector& phi) const {
    TikhonovSolveResult r;
    r.alpha = alpha_;
    r.density = densities(phi).col(0);
    r.penalty = penalty(r.density);
    r.misfit = misfit(r.density, phi);
    return r;
  }

  double penalty(const ComplexVector& g) const { return weight_ * (g.adjoint() * t_ * g).value().real(); }
  double misfit(const ComplexVector& g, const ComplexVector& phi) const {
    return weight_ * (f_ * g - phi).squaredNorm();
  }
  double functional(const ComplexVector& g, const ComplexVector& phi) const {
    return alpha_ * penalty(g) + misfit(g, phi);
  }

  /// Penalty of every column of a density matrix.
  std::vector<double> penalties(const ComplexMatrix& g) const {
    const ComplexMatrix tg = t_ * g;
    std::vector<double> out(static_cast<std::size_t>(g.cols()));
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      out[static_cast<std::size_t>(j)] = weight_ * g.col(j).dot(tg.col(j)).real();
    return out;
  }

 private:
  ComplexMatrix f_;
  ComplexMatrix t_;
  double alpha_;
  double weight_;
  bool zero_ = false;
  Eigen::LDLT<ComplexMatrix> fact_;
};

/// One-shot solve on discretized operators (weights already applied).
inline TikhonovSolveResult tikhonov_density(const ComplexMatrix& f_art, const ComplexMatrix& sharp,
                                            const ComplexVector& phi, double alpha, double weight) {
  return TikhonovSolver(f_art, sharp, alpha, weight).solve(phi);
}

/// alpha = relative * ||F_art||^2 / ||T||, or `relative` itself when absolute.
struct AlphaRule {
  double relative = 1e-5;
  bool absolute = false;

  double resolve(const ComplexMatrix& f_art, const ComplexMatrix& sharp) const {
    if (absolute) return relative;
    const double nt = spectral_norm(sharp);
    const double nf = spectral_norm(f_art);
    if (nt == 0.0 || nf == 0.0) return relative;
    return relative * nf * nf / nt;
  }
};

struct IndicatorOptions {
  PointSourceSign sign = PointSourceSign::kDerived;
  double source_scale = 1.0;  // multiplies the point-source farfield
};

struct IndicatorDiagnostics {
  double alpha = 0.0;
  double mean_misfit = 0.0;
  double max_penalty = 0.0;
  std::vector<double> penalties;
};

struct IndicatorValue {
  double value = 0.0;
  IndicatorDiagnostics diagnostics;
};

/// Operators shared by every sampling point at one wavenumber.
struct GlsmProblem {
  double k = 0.0;
  DirectionGrid observation;
  ComplexMatrix f_art;  // discretized F - F~
  ComplexMatrix sharp;  // F~#
  double weight = 0.0;

  GlsmProblem(const FarfieldMatrix& data, const FarfieldMatrix& background)
      : k(data.k), observation(data.observation) {
    const FarfieldMatrix art = artificial_farfield(data, background);
    f_art = art.as_operator();
    sharp = sharp_operator(background).matrix;
    weight = data.observation.weight();
  }
};

/// Penalties (F~# g_z, g_z) for every sampling point and every alpha rule.
inline std::vector<std::vector<double>> penalty_sweep(const GlsmProblem& prob, const SamplingGrid& grid,
                                                      const std::vector<AlphaRule>& rules,
                                                      const IndicatorOptions& opt = {},
                                                      std::vector<double>* alphas = nullptr) {
  const ComplexMatrix phi = opt.source_scale * point_source_rhs(grid.points, prob.k, prob.observation, opt.sign);
  std::vector<std::vector<double>> out;
  for (const auto& rule : rules) {
    const TikhonovSolver solver(prob.f_art, prob.sharp, rule.resolve(prob.f_art, prob.sharp), prob.weight);
    if (alphas) alphas->push_back(solver.alpha());
    out.push_back(solver.penalties(solver.densities(phi)));
  }
  return out;
}

inline IndicatorValue indicator_at_k(const FarfieldMatrix& data, const FarfieldMatrix& background,
                                     const SamplingGrid& grid, const AlphaRule& rule = {},
                                     const IndicatorOptions& opt = {}) {
  const GlsmProblem prob(data, background);
  const ComplexMatrix phi = opt.source_scale * point_source_rhs(grid.points, prob.k, prob.observation, opt.sign);
  const TikhonovSolver solver(prob.f_art, prob.sharp, rule.resolve(prob.f_art, prob.sharp), prob.weight);
  const ComplexMatrix g = solver.densities(phi);
  IndicatorValue out;
  out.diagnostics.alpha = solver.alpha();
  out.diagnostics.penalties = solver.penalties(g);
  double sum = 0.0;
  double misfit = 0.0;
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    const double p = out.diagnostics.penalties[static_cast<std::size_t>(j)];
    sum += p;
    out.diagnostics.max_penalty = std::max(out.diagnostics.max_penalty, p);
    misfit += solver.misfit(g.col(j), phi.col(j));
  }
  out.value = grid.cell_area() * sum;
  out.diagnostics.mean_misfit = misfit / static_cast<double>(g.cols());
  return out;
}

inline IndicatorValue indicator_at_k(const FarfieldMatrix& data, const BackgroundFarfield& background,
                                     const SamplingGrid& grid, const AlphaRule& rule = {},
                                     const IndicatorOptions& opt = {}) {
  return indicator_at_k(data, background.matrix, grid, rule, opt);
}

struct IndicatorSample {
  double k = 0.0;
  double value = 0.0;
  double alpha = 0.0;
  std::string failure;  // empty when the sample is valid
  bool valid() const { return failure.empty(); }
};

struct IndicatorCurve {
  std::vector<IndicatorSample> samples;
  std::string sampling_id;
  std::string background_id;

  std::vector<IndicatorSample> valid_samples() const {
    std::vector<IndicatorSample> v;
    for (const auto& s : samples)
      if (s.valid()) v.push_back(s);
    return v;
  }
};

using FarfieldSource = std::function<FarfieldMatrix(double k)>;

/// Evaluates the indicator at every k. Work for different k runs on up to
/// `jobs` threads; each sample lands in its own slot so the result does not
/// depend on scheduling. A failing k becomes a gap.
inline IndicatorCurve indicator_curve(const std::vector<double>& ks, const FarfieldSource& data,
                                      const FarfieldSource& background, const SamplingGrid& grid,
                                      const AlphaRule& rule = {}, const IndicatorOptions& opt = {}, int jobs = 1) {
  if (ks.empty()) throw InvalidArgument("indicator curve needs at least one wavenumber");
  for (std::size_t i = 1; i < ks.size(); ++i)
    if (!(ks[i] > ks[i - 1])) throw InvalidArgument("wavenumbers must be strictly increasing");
  IndicatorCurve curve;
  curve.samples.resize(ks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < ks.size(); i = next++) {
      IndicatorSample& s = curve.samples[i];
      s.k = ks[i];
      try {
        const FarfieldMatrix f = data(ks[i]);
        const FarfieldMatrix fb = background(ks[i]);
        const IndicatorValue v = indicator_at_k(f, fb, grid, rule, opt);
        s.value = v.value;
        s.alpha = v.diagnostics.alpha;
        if (i == 0) curve.background_id = fb.source;
      } catch (const std::exception& e) {
        s.failure = e.what();
        if (s.failure.empty()) s.failure = "unknown failure";
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(ks.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  curve.sampling_id = "lattice h=" + std::to_string(grid.spacing) + " points=" + std::to_string(grid.points.size());
  return curve;
}

struct Peak {
  double k = 0.0;
  double prominence = 0.0;  // in log I
  double width = 0.0;       // full width at half prominence, in k
  double value = 0.0;       // I at the sampled maximum
};

struct PeakList {
  std::vector<Peak> peaks;  // ascending in k

  /// Peak with the largest indicator value.
  const Peak& top() const {
    if (peaks.empty()) throw NoPeaks("peak list is empty");
    return *std::max_element(peaks.begin(), peaks.end(),
                             [](const Peak& a, const Peak& b) { return a.value < b.value; });
  }
};

namespace detail {
inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}
}  // namespace detail

/// Local maxima of log I whose prominence is at least
/// prominence_factor * MAD(log I), refined by a parabola through three samples.
/// Maxima closer than `min_separation` samples are treated as one jagged top
/// and only the higher one is kept.
inline PeakList detect_peaks(const IndicatorCurve& curve, double prominence_factor = 3.0, int min_separation = 3) {
  const auto samples = curve.valid_samples();
  PeakList out;
  const std::size_t n = samples.size();
  if (n < 3) return out;
  std::vector<double> k(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    k[i] = samples[i].k;
    y[i] = std::log(std::max(samples[i].value, std::numeric_limits<double>::min()));
  }
  const double med = detail::median(y);
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(y[i] - med);
  const double mad = detail::median(dev);
  const double threshold = prominence_factor * mad;

  std::vector<std::size_t> where;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
    double left_min = y[i];
    std::size_t l = i;
    while (l > 0 && y[l - 1] <= y[i]) left_min = std::min(left_min, y[--l]);
    double right_min = y[i];
    std::size_t r = i;
    while (r + 1 < n && y[r + 1] <= y[i]) right_min = std::min(right_min, y[++r]);
    const double prom = y[i] - std::max(left_min, right_min);
    if (!(prom > 0.0) || prom < threshold) continue;

    Peak p;
    p.prominence = prom;
    p.value = samples[i].value;
    const double x0 = k[i - 1], x1 = k[i], x2 = k[i + 1];
    const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
    const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    p.k = a < 0.0 ? std::clamp(-b / (2.0 * a), 0.5 * (x0 + x1), 0.5 * (x1 + x2)) : x1;

    // Width at half prominence, linearly interpolated on each side.
    const double level = y[i] - 0.5 * prom;
    double kl = k.front();
    for (std::size_t j = i; j > 0; --j) {
      if (y[j - 1] <= level) {
        kl = k[j - 1] + (level - y[j - 1]) / (y[j] - y[j - 1]) * (k[j] - k[j - 1]);
        break;
      }
    }
    double kr = k.back();
    for (std::size_t j = i; j + 1 < n; ++j) {
      if (y[j + 1] <= level) {
        kr = k[j] + (y[j] - level) / (y[j] - y[j + 1]) * (k[j + 1] - k[j]);
        break;
      }
    }
    p.width = kr - kl;
    out.peaks.push_back(p);
    where.push_back(i);
  }

  std::vector<std::size_t> order(out.peaks.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out.peaks[a].value > out.peaks[b].value; });
  std::vector<bool> keep(order.size(), false);
  for (std::size_t a : order) {
    bool clear = true;
    for (std::size_t b = 0; b < order.size() && clear; ++b) {
      if (!keep[b]) continue;
      const auto gap = where[a] > where[b] ? where[a] - where[b] : where[b] - where[a];
      clear = gap > static_cast<std::size_t>(std::max(min_separation, 0));
    }
    keep[a] = clear;
  }
  PeakList merged;
  for (std::size_t j = 0; j < out.peaks.size(); ++j)
    if (keep[j]) merged.peaks.push_back(out.peaks[j]);
  return merged;
}

}  // namespace artbg
