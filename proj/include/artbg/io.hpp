#pragma once

// Text artifacts: farfield files, indicator curves, peak lists, spectra,
// recovery reports, run configuration, noise injection and checksums.

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "artbg/errors.hpp"
#include "artbg/farfield.hpp"
#include "artbg/glsm_indicator.hpp"
#include "artbg/spectra.hpp"

namespace artbg {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kFarfieldFormat = 1;

/// Decimal text with 17 significant digits; parses back to the same double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<long> parse_long(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

namespace detail {

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path);
  return out;
}

/// Splits "key value..." at the first space.
inline std::pair<std::string, std::string> split_key(const std::string& line) {
  const auto sp = line.find(' ');
  if (sp == std::string::npos) return {line, ""};
  return {line.substr(0, sp), line.substr(sp + 1)};
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Farfield files
//
//   artbg-farfield 1
//   k <k>
//   incident <N_i>
//   observation <N_s>
//   convention <tag>
//   source <data | background descriptor | artificial>
//   created artbg <version>
//   end
//   <re> <im>          N_s * N_i lines, row s = observation, column i = incident

inline void write_farfield(const std::string& path, const FarfieldMatrix& m) {
  auto out = detail::open_out(path);
  out << "artbg-farfield " << kFarfieldFormat << "\n";
  out << "k " << format_double(m.k) << "\n";
  out << "incident " << m.incident.size() << "\n";
  out << "observation " << m.observation.size() << "\n";
  out << "convention " << m.convention << "\n";
  out << "source " << m.source << "\n";
  out << "created artbg " << kVersion << "\n";
  out << "end\n";
  for (Eigen::Index s = 0; s < m.values.rows(); ++s)
    for (Eigen::Index i = 0; i < m.values.cols(); ++i)
      out << format_double(m.values(s, i).real()) << ' ' << format_double(m.values(s, i).imag()) << '\n';
  if (!out) throw InvalidArgument("write failed for " + path);
}

inline FarfieldMatrix read_farfield(const std::string& path, std::optional<double> expected_k = std::nullopt) {
  const auto lines = detail::read_lines(path);
  std::size_t ln = 0;
  auto next = [&](const char* what) -> const std::string& {
    if (ln >= lines.size()) throw ParseError(std::string("unexpected end of file, expected ") + what, ln + 1);
    return lines[ln++];
  };
  auto field = [&](const char* key) {
    const auto [k, v] = detail::split_key(next(key));
    if (k != key) throw ParseError(std::string("expected '") + key + "'", ln);
    return v;
  };
  {
    const auto [magic, version] = detail::split_key(next("header"));
    if (magic != "artbg-farfield") throw ParseError("not a farfield file", ln);
    const auto v = parse_long(version);
    if (!v || *v != kFarfieldFormat) throw ParseError("unsupported farfield format version '" + version + "'", ln);
  }
  const auto k = parse_double(field("k"));
  if (!k || !(*k > 0.0) || !std::isfinite(*k)) throw ParseError("invalid wavenumber", ln);
  const auto ni = parse_long(field("incident"));
  if (!ni || *ni < 2) throw ParseError("invalid incident direction count", ln);
  const auto ns = parse_long(field("observation"));
  if (!ns || *ns < 2) throw ParseError("invalid observation direction count", ln);
  const std::string convention = field("convention");
  const std::string source = field("source");
  field("created");
  if (next("end") != "end") throw ParseError("expected 'end'", ln);

  ComplexMatrix values(*ns, *ni);
  for (long s = 0; s < *ns; ++s) {
    for (long i = 0; i < *ni; ++i) {
      const std::string& line = next("matrix entry");
      const auto sp = line.find(' ');
      const auto re = sp == std::string::npos ? std::nullopt : parse_double(std::string_view(line).substr(0, sp));
      const auto im = sp == std::string::npos ? std::nullopt : parse_double(std::string_view(line).substr(sp + 1));
      if (!re || !im || !std::isfinite(*re) || !std::isfinite(*im)) throw ParseError("malformed matrix entry", ln);
      values(s, i) = Complex(*re, *im);
    }
  }
  for (; ln < lines.size(); ++ln)
    if (!lines[ln].empty()) throw ParseError("trailing content after matrix entries", ln + 1);

  if (expected_k && *expected_k != *k)
    throw ValidationError("farfield file " + path + " holds k=" + format_double(*k) + ", expected k=" +
                          format_double(*expected_k));
  FarfieldMatrix m(*k, DirectionGrid(static_cast<int>(*ni)), DirectionGrid(static_cast<int>(*ns)), std::move(values),
                   source);
  m.convention = convention;
  return m;
}

// ---------------------------------------------------------------------------
// Indicator curve CSV: comment lines, then "k,I,alpha". Gaps carry I = nan.

inline void write_curve(const std::string& path, const IndicatorCurve& c) {
  auto out = detail::open_out(path);
  out << "# indicator curve\n";
  out << "# background " << c.background_id << "\n";
  out << "# sampling " << c.sampling_id << "\n";
  for (const auto& s : c.samples)
    if (!s.valid()) out << "# gap k=" << format_double(s.k) << ": " << s.failure << "\n";
  out << "k,I,alpha\n";
  for (const auto& s : c.samples)
    out << format_double(s.k) << ',' << (s.valid() ? format_double(s.value) : "nan") << ','
        << (s.valid() ? format_double(s.alpha) : "nan") << '\n';
}

inline IndicatorCurve read_curve(const std::string& path) {
  const auto lines = detail::read_lines(path);
  IndicatorCurve c;
  bool header = false;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string& line = lines[ln];
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# background ", 0) == 0) c.background_id = line.substr(13);
      if (line.rfind("# sampling ", 0) == 0) c.sampling_id = line.substr(11);
      continue;
    }
    if (!header) {
      if (line != "k,I,alpha") throw ParseError("expected header 'k,I,alpha'", ln + 1);
      header = true;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) throw ParseError("expected three columns", ln + 1);
    const auto k = parse_double(line.substr(0, c1));
    if (!k) throw ParseError("invalid k", ln + 1);
    IndicatorSample s;
    s.k = *k;
    const std::string iv = line.substr(c1 + 1, c2 - c1 - 1);
    if (iv == "nan") {
      s.failure = "gap";
    } else {
      const auto v = parse_double(iv);
      const auto a = parse_double(line.substr(c2 + 1));
      if (!v || !a) throw ParseError("invalid indicator value", ln + 1);
      s.value = *v;
      s.alpha = *a;
    }
    c.samples.push_back(s);
  }
  if (!header) throw ParseError("missing header 'k,I,alpha'", 0);
  return c;
}

// ---------------------------------------------------------------------------
// Peak list: one record per line, "peak k=<> prominence=<> width=<> value=<>".

inline void write_peaks(const std::string& path, const PeakList& peaks) {
  auto out = detail::open_out(path);
  out << "# indicator peaks, ascending in k; prominence in log I\n";
  out << "count " << peaks.peaks.size() << "\n";
  for (const auto& p : peaks.peaks)
    out << "peak k=" << format_double(p.k) << " prominence=" << format_double(p.prominence)
        << " width=" << format_double(p.width) << " value=" << format_double(p.value) << "\n";
}

inline PeakList read_peaks(const std::string& path) {
  const auto lines = detail::read_lines(path);
  PeakList out;
  std::optional<long> count;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto& line = lines[ln];
    if (line.empty() || line[0] == '#') continue;
    const auto [key, rest] = detail::split_key(line);
    if (key == "count") {
      count = parse_long(rest);
      if (!count) throw ParseError("invalid peak count", ln + 1);
      continue;
    }
    if (key != "peak") throw ParseError("unknown record '" + key + "'", ln + 1);
    Peak p;
    for (const auto& kv : detail::split_ws(rest)) {
      const auto eq = kv.find('=');
      const auto v = eq == std::string::npos ? std::nullopt : parse_double(kv.substr(eq + 1));
      if (!v) throw ParseError("malformed field '" + kv + "'", ln + 1);
      const std::string name = kv.substr(0, eq);
      if (name == "k") p.k = *v;
      else if (name == "prominence") p.prominence = *v;
      else if (name == "width") p.width = *v;
      else if (name == "value") p.value = *v;
      else throw ParseError("unknown field '" + name + "'", ln + 1);
    }
    out.peaks.push_back(p);
  }
  if (count && static_cast<std::size_t>(*count) != out.peaks.size())
    throw ParseError("peak count does not match the records", 0);
  return out;
}

// ---------------------------------------------------------------------------
// Spectrum CSV

inline void write_spectrum(const std::string& path, const Spectrum& s) {
  auto out = detail::open_out(path);
  out << "# problem " << s.kind_name() << "\n";
  out << "# boundary " << s.boundary << "\n";
  out << "# domain " << s.domain << "\n";
  out << "# index " << s.index << "\n";
  out << "# method " << s.method << "\n";
  out << "# h " << format_double(s.h) << "\n";
  out << "p,lambda,k\n";
  for (std::size_t p = 0; p < s.eigenvalues.size(); ++p)
    out << p << ',' << format_double(s.eigenvalues[p]) << ',' << format_double(std::sqrt(s.eigenvalues[p])) << '\n';
}

inline Spectrum read_spectrum(const std::string& path) {
  const auto lines = detail::read_lines(path);
  Spectrum s;
  bool header = false;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto& line = lines[ln];
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto [key, rest] = detail::split_key(line.substr(std::min<std::size_t>(2, line.size())));
      if (key == "problem") s.kind = rest == "cavity" ? SpectrumKind::kCavity : SpectrumKind::kBuckling;
      else if (key == "boundary") s.boundary = rest;
      else if (key == "domain") s.domain = rest;
      else if (key == "index") s.index = rest;
      else if (key == "method") s.method = rest;
      else if (key == "h") s.h = parse_double(rest).value_or(0.0);
      continue;
    }
    if (!header) {
      if (line != "p,lambda,k") throw ParseError("expected header 'p,lambda,k'", ln + 1);
      header = true;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    const auto v = c2 == std::string::npos ? std::nullopt : parse_double(line.substr(c1 + 1, c2 - c1 - 1));
    if (!v || !(*v > 0.0)) throw ParseError("invalid eigenvalue row", ln + 1);
    s.eigenvalues.push_back(*v);
  }
  if (!header) throw ParseError("missing header 'p,lambda,k'", 0);
  return s;
}

// ---------------------------------------------------------------------------
// Key-value records ("key = value", one per line, order preserved).

using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline void write_key_values(const std::string& path, const KeyValues& kv, const std::string& title = "") {
  auto out = detail::open_out(path);
  if (!title.empty()) out << "# " << title << "\n";
  for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
}

inline KeyValues read_key_values(const std::string& path) {
  const auto lines = detail::read_lines(path);
  KeyValues kv;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto& line = lines[ln];
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", ln + 1);
    kv.emplace_back(line.substr(0, eq), line.substr(eq + 3));
  }
  return kv;
}

inline KeyValues report_records(const RecoveryReport& r, const std::string& reference) {
  KeyValues kv;
  kv.emplace_back("reference", reference);
  kv.emplace_back("pairs", std::to_string(r.pairs.size()));
  for (std::size_t j = 0; j < r.pairs.size(); ++j) {
    const auto& p = r.pairs[j];
    kv.emplace_back("pair." + std::to_string(j), "k=" + format_double(p.peak_k) + " level=" + std::to_string(p.level) +
                                                     " lambda1=" + format_double(p.reference) +
                                                     " ratio=" + format_double(p.ratio));
  }
  kv.emplace_back("unmatched_peaks", std::to_string(r.unmatched));
  kv.emplace_back("index_estimate", format_double(r.index));
  kv.emplace_back("ess_inf_upper_bound", format_double(r.ess_inf_upper));
  kv.emplace_back("ess_sup_lower_bound", format_double(r.ess_sup_lower));
  kv.emplace_back("ratio_spread", format_double(r.spread));
  return kv;
}

// ---------------------------------------------------------------------------
// Sectioned configuration text:
//
//   # comment
//   [section]
//   key = value
//
// Keys may repeat (e.g. several medium pieces); order is preserved.

class Config {
 public:
  struct Entry {
    std::string section;
    std::string key;
    std::string value;
    std::size_t line = 0;
  };

  static Config parse(std::istream& in) {
    Config c;
    std::string line;
    std::string section;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']' || t.size() < 3) throw ParseError("malformed section header", ln);
        section = trim(t.substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ParseError("expected 'key = value'", ln);
      if (section.empty()) throw ParseError("entry outside of any section", ln);
      const std::string key = trim(t.substr(0, eq));
      if (key.empty()) throw ParseError("empty key", ln);
      c.entries_.push_back({section, key, trim(t.substr(eq + 1)), ln});
    }
    return c;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config " + path);
    return parse(in);
  }

  static Config parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  std::vector<Entry> all(const std::string& section, const std::string& key) const {
    std::vector<Entry> out;
    for (const auto& e : entries_)
      if (e.section == section && e.key == key) out.push_back(e);
    return out;
  }

  std::optional<Entry> get(const std::string& section, const std::string& key) const {
    const auto v = all(section, key);
    if (v.empty()) return std::nullopt;
    if (v.size() > 1) throw ParseError("duplicate key '" + key + "' in [" + section + "]", v[1].line);
    return v.front();
  }

  std::string string_or(const std::string& section, const std::string& key, const std::string& def) const {
    const auto e = get(section, key);
    return e ? e->value : def;
  }

  double number_or(const std::string& section, const std::string& key, double def) const {
    const auto e = get(section, key);
    if (!e) return def;
    const auto v = parse_double(e->value);
    if (!v) throw ParseError("'" + key + "' must be a number", e->line);
    return *v;
  }

  long integer_or(const std::string& section, const std::string& key, long def) const {
    const auto e = get(section, key);
    if (!e) return def;
    const auto v = parse_long(e->value);
    if (!v) throw ParseError("'" + key + "' must be an integer", e->line);
    return *v;
  }

  const std::vector<Entry>& entries() const { return entries_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::vector<Entry> entries_;
};

/// Shape text: "disk cx cy r", "kite cx cy scale", joined by '+' for unions.
inline Shape parse_shape(const std::string& text, std::size_t line = 0) {
  std::vector<Shape> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto plus = text.find('+', start);
    const std::string piece = text.substr(start, plus == std::string::npos ? std::string::npos : plus - start);
    const auto w = detail::split_ws(piece);
    if (w.size() != 4) throw ParseError("shape needs '<disk|kite> x y size', got '" + piece + "'", line);
    double v[3];
    for (int i = 0; i < 3; ++i) {
      const auto d = parse_double(w[static_cast<std::size_t>(i) + 1]);
      if (!d) throw ParseError("shape parameter '" + w[static_cast<std::size_t>(i) + 1] + "' is not a number", line);
      v[i] = *d;
    }
    if (!(v[2] > 0.0)) throw ParseError("shape size must be positive", line);
    if (w[0] == "disk") parts.emplace_back(Disk{{v[0], v[1]}, v[2]});
    else if (w[0] == "kite") parts.emplace_back(Kite{{v[0], v[1]}, v[2]});
    else throw ParseError("unknown shape '" + w[0] + "'", line);
    if (plus == std::string::npos) break;
    start = plus + 1;
  }
  if (parts.size() == 1) return parts.front();
  return ShapeUnion{std::move(parts)};
}

inline BoundaryCondition parse_boundary(const std::string& text, std::size_t line = 0) {
  const auto w = detail::split_ws(text);
  if (w.size() == 1 && w[0] == "dirichlet") return Dirichlet{};
  if (w.size() == 2 && w[0] == "robin") {
    const auto g = parse_double(w[1]);
    if (!g || !std::isfinite(*g)) throw ParseError("robin impedance must be a finite number", line);
    return Robin{*g};
  }
  throw ParseError("boundary condition must be 'dirichlet' or 'robin <gamma>'", line);
}

// ---------------------------------------------------------------------------
// Noise and checksums

/// M + E with complex Gaussian E scaled so that ||E||_F = delta ||M||_F.
inline FarfieldMatrix inject_noise(const FarfieldMatrix& m, double delta, std::uint64_t seed) {
  if (!(delta >= 0.0)) throw InvalidArgument("noise level must be non-negative");
  if (delta == 0.0) return m;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexMatrix e(m.values.rows(), m.values.cols());
  for (Eigen::Index j = 0; j < e.cols(); ++j)
    for (Eigen::Index i = 0; i < e.rows(); ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      e(i, j) = Complex(re, im);
    }
  const double en = e.norm();
  FarfieldMatrix out = m;
  if (en > 0.0) out.values += (delta * m.values.norm() / en) * e;
  return out;
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw SolverFailure("SHA-256 computation failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

}  // namespace artbg
