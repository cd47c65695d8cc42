#pragma once

// Run configuration and the staged pipeline
//   simulate -> background -> indicator -> spectrum -> recover -> verify
// Every stage reads its inputs from the run directory, so stages can be run
// one at a time. The manifest is written last and carries no timestamps.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "artbg/artificial_background.hpp"
#include "artbg/domain.hpp"
#include "artbg/errors.hpp"
#include "artbg/forward_scattering.hpp"
#include "artbg/glsm_indicator.hpp"
#include "artbg/io.hpp"
#include "artbg/special_functions.hpp"
#include "artbg/spectra.hpp"

namespace artbg {

enum class ReferenceMethod { kAuto, kAnalytic, kLattice };

struct RunConfig {
  MediumSpec medium;
  BackgroundSpec background = ZimBackground{Disk{{0.0, 0.0}, 1.0}};
  int directions = 64;
  double k_min = 2.2;
  double k_max = 3.2;
  double k_step = 0.01;
  VolumeOptions volume;
  double sampling_spacing = 0.1;
  std::optional<Shape> sampling_shape;  // defaults to Omega_b
  AlphaRule alpha;
  std::vector<double> alpha_sweep;      // extra relative alphas, one curve each
  PointSourceSign sign = PointSourceSign::kDerived;
  double prominence_factor = 3.0;
  double noise = 0.0;
  std::uint64_t seed = 1;
  int spectrum_count = 8;
  ReferenceMethod reference = ReferenceMethod::kAuto;
  std::vector<double> spectrum_h = {1.0 / 32.0, 1.0 / 48.0, 1.0 / 64.0};
  int extrapolation_degree = 1;
  int first_level = 0;
  std::string out_dir = "run";
  int jobs = 1;  // execution only; results do not depend on it

  /// k_min + i * k_step for every i with the value not above k_max.
  std::vector<double> wavenumbers() const {
    std::vector<double> ks;
    for (long i = 0;; ++i) {
      const double k = k_min + static_cast<double>(i) * k_step;
      if (k > k_max + 1e-9 * k_step) break;
      ks.push_back(k);
    }
    return ks;
  }

  Shape sampling_domain() const { return sampling_shape ? *sampling_shape : background.domain(); }

  void validate() const {
    if (medium.pieces().empty()) throw InvalidArgument("the medium needs at least one piece");
    if (!(k_min > 0.0)) throw InvalidArgument("k_min must be > 0");
    if (!(k_step > 0.0)) throw InvalidArgument("k step must be > 0");
    if (!(k_max >= k_min)) throw InvalidArgument("k_max must not be below k_min");
    if (directions < 2) throw InvalidArgument("direction count must be >= 2");
    if (!(volume.h > 0.0) || volume.subsamples < 1) throw InvalidArgument("invalid volume grid");
    if (!(sampling_spacing > 0.0)) throw InvalidArgument("sampling spacing must be > 0");
    if (!(alpha.relative > 0.0)) throw InvalidArgument("alpha must be > 0");
    for (double a : alpha_sweep)
      if (!(a > 0.0)) throw InvalidArgument("alpha sweep values must be > 0");
    if (!(noise >= 0.0)) throw InvalidArgument("noise level must be >= 0");
    if (spectrum_count < 1) throw InvalidArgument("spectrum count must be >= 1");
    if (extrapolation_degree < 0 || spectrum_h.size() < static_cast<std::size_t>(extrapolation_degree + 1))
      throw InvalidArgument("need more spectrum grids than the extrapolation degree");
  }

  /// Effective parameters, in a fixed order, for the manifest.
  KeyValues describe() const {
    KeyValues kv;
    kv.emplace_back("medium", medium.describe());
    kv.emplace_back("background", background.describe());
    kv.emplace_back("directions", std::to_string(directions));
    kv.emplace_back("k_min", format_double(k_min));
    kv.emplace_back("k_max", format_double(k_max));
    kv.emplace_back("k_step", format_double(k_step));
    kv.emplace_back("k_count", std::to_string(wavenumbers().size()));
    kv.emplace_back("volume_h", format_double(volume.h));
    kv.emplace_back("volume_subsamples", std::to_string(volume.subsamples));
    kv.emplace_back("sampling_shape", sampling_domain().describe());
    kv.emplace_back("sampling_spacing", format_double(sampling_spacing));
    kv.emplace_back("alpha", format_double(alpha.relative));
    kv.emplace_back("alpha_mode", alpha.absolute ? "absolute" : "relative");
    std::string sweep;
    for (double a : alpha_sweep) sweep += (sweep.empty() ? "" : " ") + format_double(a);
    kv.emplace_back("alpha_sweep", sweep.empty() ? "none" : sweep);
    kv.emplace_back("point_source", sign == PointSourceSign::kDerived ? "derived" : "literal");
    kv.emplace_back("prominence_factor", format_double(prominence_factor));
    kv.emplace_back("noise", format_double(noise));
    kv.emplace_back("seed", std::to_string(seed));
    kv.emplace_back("spectrum_count", std::to_string(spectrum_count));
    kv.emplace_back("reference",
                    reference == ReferenceMethod::kAuto ? "auto"
                    : reference == ReferenceMethod::kAnalytic ? "analytic"
                                                              : "lattice");
    std::string hs;
    for (double h : spectrum_h) hs += (hs.empty() ? "" : " ") + format_double(h);
    kv.emplace_back("spectrum_h", hs);
    kv.emplace_back("extrapolation_degree", std::to_string(extrapolation_degree));
    kv.emplace_back("first_level", std::to_string(first_level));
    kv.emplace_back("convention", FarfieldConvention::kTag);
    return kv;
  }
};

namespace detail {

inline std::vector<double> parse_numbers(const Config::Entry& e) {
  std::vector<double> out;
  for (const auto& w : split_ws(e.value)) {
    const auto v = parse_double(w);
    if (!v) throw ParseError("'" + w + "' is not a number", e.line);
    out.push_back(*v);
  }
  return out;
}

inline MediumSpec::Piece parse_piece(const Config::Entry& e) {
  const auto sp = e.value.find(' ');
  const auto v = sp == std::string::npos ? std::nullopt : parse_double(e.value.substr(0, sp));
  if (!v) throw ParseError("piece needs '<value> <shape>'", e.line);
  return {parse_shape(e.value.substr(sp + 1), e.line), *v};
}

inline void check_known_keys(const Config& c) {
  static const std::map<std::string, std::vector<std::string>> known = {
      {"medium", {"piece"}},
      {"background", {"type", "shape", "boundary", "piece"}},
      {"directions", {"count"}},
      {"wavenumbers", {"min", "max", "step"}},
      {"volume", {"h", "subsamples"}},
      {"sampling", {"spacing", "shape"}},
      {"indicator", {"alpha", "alpha_mode", "alpha_sweep", "point_source", "prominence"}},
      {"noise", {"level", "seed"}},
      {"spectrum", {"count", "reference", "h", "degree", "first_level"}},
      {"output", {"dir"}},
      {"run", {"jobs"}},
  };
  for (const auto& e : c.entries()) {
    const auto it = known.find(e.section);
    if (it == known.end()) throw ParseError("unknown section [" + e.section + "]", e.line);
    if (std::find(it->second.begin(), it->second.end(), e.key) == it->second.end())
      throw ParseError("unknown key '" + e.key + "' in [" + e.section + "]", e.line);
  }
}

}  // namespace detail

inline RunConfig run_config_from(const Config& c) {
  detail::check_known_keys(c);
  RunConfig r;
  std::vector<MediumSpec::Piece> pieces;
  for (const auto& e : c.all("medium", "piece")) pieces.push_back(detail::parse_piece(e));
  if (pieces.empty()) throw ParseError("[medium] needs at least one 'piece = <n> <shape>'", 0);
  r.medium = MediumSpec(std::move(pieces));

  const std::string type = c.string_or("background", "type", "zim");
  auto shape_entry = c.get("background", "shape");
  auto background_shape = [&]() {
    return shape_entry ? parse_shape(shape_entry->value, shape_entry->line) : r.medium.pieces().front().shape;
  };
  if (type == "zim") {
    r.background = ZimBackground{background_shape()};
  } else if (type == "obstacle") {
    const auto b = c.get("background", "boundary");
    r.background = ObstacleBackground{background_shape(),
                                      b ? parse_boundary(b->value, b->line) : BoundaryCondition(Dirichlet{})};
  } else if (type == "rho") {
    GeneralRhoBackground g;
    for (const auto& e : c.all("background", "piece")) g.pieces.push_back(detail::parse_piece(e));
    if (g.pieces.empty()) throw ParseError("rho background needs 'piece = <rho> <shape>'", 0);
    r.background = g;
  } else {
    const auto e = c.get("background", "type");
    throw ParseError("background type must be zim, obstacle or rho", e ? e->line : 0);
  }

  r.directions = static_cast<int>(c.integer_or("directions", "count", r.directions));
  r.k_min = c.number_or("wavenumbers", "min", r.k_min);
  r.k_max = c.number_or("wavenumbers", "max", r.k_max);
  r.k_step = c.number_or("wavenumbers", "step", r.k_step);
  r.volume.h = c.number_or("volume", "h", r.volume.h);
  r.volume.subsamples = static_cast<int>(c.integer_or("volume", "subsamples", r.volume.subsamples));
  r.sampling_spacing = c.number_or("sampling", "spacing", r.sampling_spacing);
  if (const auto e = c.get("sampling", "shape")) r.sampling_shape = parse_shape(e->value, e->line);

  r.alpha.relative = c.number_or("indicator", "alpha", r.alpha.relative);
  const std::string mode = c.string_or("indicator", "alpha_mode", "relative");
  if (mode != "relative" && mode != "absolute")
    throw ParseError("alpha_mode must be relative or absolute", c.get("indicator", "alpha_mode")->line);
  r.alpha.absolute = mode == "absolute";
  if (const auto e = c.get("indicator", "alpha_sweep")) r.alpha_sweep = detail::parse_numbers(*e);
  const std::string sign = c.string_or("indicator", "point_source", "derived");
  if (sign != "derived" && sign != "literal")
    throw ParseError("point_source must be derived or literal", c.get("indicator", "point_source")->line);
  r.sign = sign == "derived" ? PointSourceSign::kDerived : PointSourceSign::kLiteral;
  r.prominence_factor = c.number_or("indicator", "prominence", r.prominence_factor);

  r.noise = c.number_or("noise", "level", r.noise);
  const long seed = c.integer_or("noise", "seed", static_cast<long>(r.seed));
  if (seed < 0) throw ParseError("seed must be non-negative", c.get("noise", "seed")->line);
  r.seed = static_cast<std::uint64_t>(seed);

  r.spectrum_count = static_cast<int>(c.integer_or("spectrum", "count", r.spectrum_count));
  const std::string ref = c.string_or("spectrum", "reference", "auto");
  if (ref == "auto") r.reference = ReferenceMethod::kAuto;
  else if (ref == "analytic") r.reference = ReferenceMethod::kAnalytic;
  else if (ref == "lattice") r.reference = ReferenceMethod::kLattice;
  else throw ParseError("reference must be auto, analytic or lattice", c.get("spectrum", "reference")->line);
  if (const auto e = c.get("spectrum", "h")) r.spectrum_h = detail::parse_numbers(*e);
  r.extrapolation_degree = static_cast<int>(c.integer_or("spectrum", "degree", r.extrapolation_degree));
  r.first_level = static_cast<int>(c.integer_or("spectrum", "first_level", r.first_level));

  r.out_dir = c.string_or("output", "dir", r.out_dir);
  r.jobs = static_cast<int>(c.integer_or("run", "jobs", r.jobs));
  r.validate();
  return r;
}

inline RunConfig load_run_config(const std::string& path) { return run_config_from(Config::parse_file(path)); }

// ---------------------------------------------------------------------------

struct StageLog {
  std::vector<std::string> warnings;
  std::vector<std::string> errors;
  KeyValues stages;  // stage name -> ok | failed | skipped
};

namespace detail {

/// Runs body(i) for i in [0, n) on up to `jobs` threads. The first exception
/// (lowest index) is rethrown after all work finished.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const int t = std::max(1, std::min<int>(jobs, static_cast<int>(std::max<std::size_t>(n, 1))));
  std::vector<std::thread> pool;
  for (int j = 1; j < t; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
}

inline std::string indexed(const std::string& stem, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%04zu.txt", i);
  return stem + buf;
}

inline std::uint64_t noise_seed(std::uint64_t seed, std::size_t i) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(i)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace detail

/// File layout of a run directory.
struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path data(std::size_t i) const { return root / "farfield" / detail::indexed("F", i); }
  std::filesystem::path background(std::size_t i) const {
    return root / "background" / detail::indexed("Ftilde", i);
  }
  std::filesystem::path curve() const { return root / "indicator.csv"; }
  std::filesystem::path sweep_curve(std::size_t j) const {
    return root / ("indicator_alpha_" + std::to_string(j) + ".csv");
  }
  std::filesystem::path peaks() const { return root / "peaks.txt"; }
  std::filesystem::path spectrum() const { return root / "spectrum_reference.csv"; }
  std::filesystem::path report() const { return root / "recovery.txt"; }
  std::filesystem::path verify() const { return root / "verify.txt"; }
  std::filesystem::path warnings() const { return root / "warnings.txt"; }
  std::filesystem::path manifest() const { return root / "manifest.txt"; }
};

inline void stage_simulate(const RunConfig& cfg, StageLog& log) {
  const RunPaths paths{cfg.out_dir};
  std::filesystem::create_directories(paths.root / "farfield");
  const auto ks = cfg.wavenumbers();
  const DirectionGrid grid(cfg.directions);
  std::vector<std::vector<std::string>> warn(ks.size());
  detail::parallel_for(ks.size(), cfg.jobs, [&](std::size_t i) {
    FarfieldMatrix f = farfield_matrix(cfg.medium, ks[i], grid, grid, cfg.volume, &warn[i]);
    f = inject_noise(f, cfg.noise, detail::noise_seed(cfg.seed, i));
    write_farfield(paths.data(i).string(), f);
  });
  for (std::size_t i = 0; i < ks.size(); ++i)
    for (const auto& w : warn[i]) log.warnings.push_back("simulate k=" + format_double(ks[i]) + ": " + w);
}

inline void stage_background(const RunConfig& cfg, StageLog& log) {
  const RunPaths paths{cfg.out_dir};
  std::filesystem::create_directories(paths.root / "background");
  const auto ks = cfg.wavenumbers();
  const DirectionGrid grid(cfg.directions);
  std::vector<std::vector<std::string>> warn(ks.size());
  detail::parallel_for(ks.size(), cfg.jobs, [&](std::size_t i) {
    const auto fb = background_farfield(cfg.background, ks[i], grid, grid, cfg.volume, &warn[i]);
    write_farfield(paths.background(i).string(), fb.matrix);
  });
  for (std::size_t i = 0; i < ks.size(); ++i)
    for (const auto& w : warn[i]) log.warnings.push_back("background k=" + format_double(ks[i]) + ": " + w);
}

inline void stage_indicator(const RunConfig& cfg, StageLog& log) {
  const RunPaths paths{cfg.out_dir};
  const auto ks = cfg.wavenumbers();
  auto index_of = [&](double k) {
    const auto it = std::find(ks.begin(), ks.end(), k);
    if (it == ks.end()) throw ValidationError("wavenumber " + format_double(k) + " is not on the run grid");
    return static_cast<std::size_t>(it - ks.begin());
  };
  const FarfieldSource data = [&](double k) { return read_farfield(paths.data(index_of(k)).string(), k); };
  const FarfieldSource background = [&](double k) {
    return read_farfield(paths.background(index_of(k)).string(), k);
  };
  const SamplingGrid grid = make_sampling_grid(cfg.sampling_domain(), cfg.sampling_spacing);
  IndicatorOptions opt;
  opt.sign = cfg.sign;

  const IndicatorCurve curve = indicator_curve(ks, data, background, grid, cfg.alpha, opt, cfg.jobs);
  write_curve(paths.curve().string(), curve);
  for (const auto& s : curve.samples)
    if (!s.valid()) log.warnings.push_back("indicator gap at k=" + format_double(s.k) + ": " + s.failure);
  const PeakList peaks = detect_peaks(curve, cfg.prominence_factor);
  write_peaks(paths.peaks().string(), peaks);
  if (peaks.peaks.empty()) log.warnings.push_back("indicator curve has no peaks");

  for (std::size_t j = 0; j < cfg.alpha_sweep.size(); ++j) {
    AlphaRule rule = cfg.alpha;
    rule.relative = cfg.alpha_sweep[j];
    write_curve(paths.sweep_curve(j).string(), indicator_curve(ks, data, background, grid, rule, opt, cfg.jobs));
  }
}

/// Spectrum of the n = 1 eigenproblem that the background turns transmission
/// eigenvalues into: clamped buckling for ZIM, the cavity problem for obstacles.
inline Spectrum reference_spectrum(const RunConfig& cfg) {
  const auto& v = cfg.background.variant();
  if (std::holds_alternative<GeneralRhoBackground>(v))
    throw UnsupportedShape("no reference eigenproblem is available for general rho backgrounds");
  const Shape domain = cfg.background.domain();
  const MediumSpec one = MediumSpec::homogeneous(domain, 1.0);
  const Disk* disk = domain.as_disk();
  const bool analytic = cfg.reference == ReferenceMethod::kAnalytic ||
                        (cfg.reference == ReferenceMethod::kAuto && disk != nullptr);
  if (analytic && !disk) throw UnsupportedShape("analytic reference spectra need a disk");

  const auto* obstacle = std::get_if<ObstacleBackground>(&v);
  if (analytic) {
    Spectrum s = obstacle ? disk_cavity_reference(obstacle->bc, cfg.spectrum_count, disk->radius, 1.0)
                          : disk_buckling_reference(cfg.spectrum_count, disk->radius, 1.0);
    s.domain = domain.describe();
    return s;
  }
  if (obstacle && !obstacle->bc.is_dirichlet())
    throw UnsupportedShape("lattice reference spectra support only Dirichlet obstacles");

  std::vector<std::vector<double>> per_level(static_cast<std::size_t>(cfg.spectrum_count));
  Spectrum last;
  for (double h : cfg.spectrum_h) {
    last = obstacle ? cavity_spectrum(domain, one, obstacle->bc, h, cfg.spectrum_count)
                    : buckling_spectrum(domain, one, h, cfg.spectrum_count);
    for (std::size_t p = 0; p < per_level.size(); ++p) per_level[p].push_back(last.eigenvalues[p]);
  }
  Spectrum s = last;
  s.method = "lattice, extrapolated to h=0 (degree " + std::to_string(cfg.extrapolation_degree) + ")";
  s.h = 0.0;
  s.lattice.reset();
  s.eigenvectors.resize(0, 0);
  for (std::size_t p = 0; p < per_level.size(); ++p)
    s.eigenvalues[p] = extrapolate_to_zero(cfg.spectrum_h, per_level[p], cfg.extrapolation_degree);
  std::sort(s.eigenvalues.begin(), s.eigenvalues.end());
  return s;
}

/// Wavenumbers in the scanned range where k^2 is an n = 1 cavity eigenvalue
/// for an obstacle background.
inline std::vector<double> cavity_conflicts(const RunConfig& cfg) {
  std::vector<double> out;
  const auto* obstacle = std::get_if<ObstacleBackground>(&cfg.background.variant());
  if (!obstacle) return out;
  const Disk* disk = obstacle->domain.as_disk();
  int count = 8;
  for (;;) {
    const Spectrum s = disk_cavity_reference(obstacle->bc, count, disk->radius, 1.0);
    if (std::sqrt(s.eigenvalues.back()) > cfg.k_max || count > 4096) {
      for (double v : s.eigenvalues) {
        const double k = std::sqrt(v);
        if (k >= cfg.k_min && k <= cfg.k_max && (out.empty() || k > out.back() * (1.0 + 1e-9))) out.push_back(k);
      }
      return out;
    }
    count *= 2;
  }
}

inline void stage_spectrum(const RunConfig& cfg, StageLog& log) {
  const RunPaths paths{cfg.out_dir};
  std::filesystem::create_directories(paths.root);
  for (double k : cavity_conflicts(cfg))
    log.warnings.push_back("k=" + format_double(k) +
                           " is an n = 1 cavity eigenvalue of the obstacle background inside the scanned range");
  if (std::holds_alternative<GeneralRhoBackground>(cfg.background.variant())) {
    log.warnings.push_back("spectrum skipped: general rho backgrounds have no reference eigenproblem");
    return;
  }
  write_spectrum(paths.spectrum().string(), reference_spectrum(cfg));
}

inline void stage_recover(const RunConfig& cfg, StageLog& log) {
  const RunPaths paths{cfg.out_dir};
  if (!std::filesystem::exists(paths.spectrum())) {
    log.warnings.push_back("recover skipped: no reference spectrum");
    return;
  }
  const PeakList peaks = read_peaks(paths.peaks().string());
  const Spectrum ref = read_spectrum(paths.spectrum().string());
  const RecoveryReport rep = recover_index(peaks, ref, cfg.first_level);
  write_key_values(paths.report().string(),
                   report_records(rep, ref.kind_name() + " " + ref.boundary + " (" + ref.method + ")"),
                   "index recovery from indicator peaks");
}

// ---------------------------------------------------------------------------
// Quick oracle and property checks, cheap enough to run with every pipeline.

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double bound = 0.0;
};

inline std::vector<CheckResult> run_checks() {
  std::vector<CheckResult> out;
  auto add = [&](std::string name, double measured, double bound) {
    out.push_back({std::move(name), measured <= bound, measured, bound});
  };

  double wr = 0.0;
  for (int m = 0; m <= 5; ++m) {
    const double x = 1.7;
    const double w = bessel_j(m + 1, x) * bessel_y(m, x) - bessel_j(m, x) * bessel_y(m + 1, x);
    wr = std::max(wr, std::abs(w - 2.0 / (kPi * x)));
  }
  add("bessel_wronskian", wr, 1e-10);

  const Disk unit{{0.0, 0.0}, 1.0};
  const DirectionGrid g16(16);
  const auto zero = farfield_matrix(MediumSpec::homogeneous(unit, 1.0), 2.0, g16, g16, {0.1, 1});
  add("zero_contrast", zero.values.cwiseAbs().maxCoeff(), 1e-12);

  const auto ls = farfield_matrix(MediumSpec::homogeneous(unit, 2.0), 2.0, g16, g16, {0.1, 1});
  const auto mie = mie_disk_farfield(2.0, unit, 2.0, g16, g16);
  add("ls_vs_mie_h0.1", (ls.values - mie.values).cwiseAbs().maxCoeff() / mie.values.cwiseAbs().maxCoeff(), 2e-2);

  const Complex c = 2.0 * kI * 2.0 * std::conj(FarfieldConvention::gamma(2.0));
  const ComplexMatrix s = ComplexMatrix::Identity(16, 16) + c * mie.as_operator();
  add("mie_unitarity", (s.adjoint() * s - ComplexMatrix::Identity(16, 16)).cwiseAbs().maxCoeff(), 1e-8);

  const Shape kite = Kite{{0.4, 0.0}, 0.6};
  const auto fk = farfield_matrix(MediumSpec::homogeneous(kite, 2.0), 2.0, g16, g16, {0.1, 1});
  double rec = 0.0;
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) rec = std::max(rec, std::abs(fk.values(a, b) - fk.values((b + 8) % 16, (a + 8) % 16)));
  add("reciprocity_kite", rec / fk.values.cwiseAbs().maxCoeff(), 1e-3);

  const auto s1 = buckling_spectrum(unit, MediumSpec::homogeneous(unit, 1.0), 0.05, 4);
  const auto s3 = buckling_spectrum(unit, MediumSpec::homogeneous(unit, 3.0), 0.05, 4);
  double sc = 0.0;
  for (std::size_t p = 0; p < 4; ++p) sc = std::max(sc, std::abs(s3.eigenvalues[p] * 3.0 - s1.eigenvalues[p]) / s1.eigenvalues[p]);
  add("buckling_scaling", sc, 1e-10);
  return out;
}

inline void stage_verify(const RunConfig& cfg, StageLog&) {
  const RunPaths paths{cfg.out_dir};
  std::filesystem::create_directories(paths.root);
  KeyValues kv;
  bool ok = true;
  for (const auto& c : run_checks()) {
    kv.emplace_back(c.name, std::string(c.passed ? "pass" : "FAIL") + " measured=" + format_double(c.measured) +
                                " bound=" + format_double(c.bound));
    ok = ok && c.passed;
  }
  write_key_values(paths.verify().string(), kv, "oracle and property checks");
  if (!ok) throw ValidationError("at least one check failed, see verify.txt");
}

// ---------------------------------------------------------------------------

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"simulate", "background", "indicator",
                                                 "spectrum", "recover",    "verify"};
  return names;
}

inline void run_stage(const std::string& name, const RunConfig& cfg, StageLog& log) {
  if (name == "simulate") return stage_simulate(cfg, log);
  if (name == "background") return stage_background(cfg, log);
  if (name == "indicator") return stage_indicator(cfg, log);
  if (name == "spectrum") return stage_spectrum(cfg, log);
  if (name == "recover") return stage_recover(cfg, log);
  if (name == "verify") return stage_verify(cfg, log);
  throw InvalidArgument("unknown stage '" + name + "'");
}

/// Parameters, stage status, warnings, errors and SHA-256 of every artifact
/// under the run directory (sorted by relative path).
inline void write_manifest(const RunConfig& cfg, const StageLog& log) {
  const RunPaths paths{cfg.out_dir};
  std::filesystem::create_directories(paths.root);
  {
    auto out = detail::open_out(paths.warnings().string());
    for (const auto& w : log.warnings) out << w << "\n";
  }
  std::vector<std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(paths.root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = std::filesystem::relative(e.path(), paths.root).generic_string();
    if (rel != "manifest.txt") files.push_back(rel);
  }
  std::sort(files.begin(), files.end());

  KeyValues kv;
  kv.emplace_back("format", "artbg-manifest 1");
  kv.emplace_back("version", kVersion);
  for (const auto& p : cfg.describe()) kv.emplace_back("param." + p.first, p.second);
  for (const auto& s : log.stages) kv.emplace_back("stage." + s.first, s.second);
  kv.emplace_back("warnings", std::to_string(log.warnings.size()));
  for (std::size_t i = 0; i < log.errors.size(); ++i) kv.emplace_back("error." + std::to_string(i), log.errors[i]);
  kv.emplace_back("status", log.errors.empty() ? "ok" : "failed");
  for (const auto& f : files) kv.emplace_back("sha256." + f, sha256_file((paths.root / f).string()));
  write_key_values(paths.manifest().string(), kv, "run manifest");
}

struct PipelineResult {
  bool ok = false;
  StageLog log;
  std::filesystem::path manifest;
};

/// Runs the named stages in order; a failing stage stops the run, is
/// recorded, and the manifest is still written.
inline PipelineResult run_stages(const RunConfig& cfg, const std::vector<std::string>& stages) {
  cfg.validate();
  PipelineResult res;
  for (const auto& name : stages) {
    try {
      run_stage(name, cfg, res.log);
      res.log.stages.emplace_back(name, "ok");
    } catch (const std::exception& e) {
      res.log.errors.push_back(name + ": " + e.what());
      res.log.stages.emplace_back(name, "failed");
      break;
    }
  }
  write_manifest(cfg, res.log);
  res.ok = res.log.errors.empty();
  res.manifest = RunPaths{cfg.out_dir}.manifest();
  return res;
}

inline PipelineResult run_pipeline(const RunConfig& cfg) { return run_stages(cfg, stage_names()); }

}  // namespace artbg
