#pragma once

#include <nlohmann/json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gmmgrid/error.hpp"
#include "gmmgrid/grid_search.hpp"
#include "gmmgrid/kde.hpp"
#include "gmmgrid/mixture.hpp"
#include "gmmgrid/spectral.hpp"

namespace gmmgrid {

using Json = nlohmann::json;

namespace io {

inline Json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const Json& j) {
  const auto xs = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

inline Json to_json(const SphericalMixture& m) {
  Json comps = Json::array();
  for (int i = 0; i < m.k(); ++i) comps.push_back({{"weight", m.weights()[i]}, {"mean", to_json(m.means()[i])}});
  return {{"dim", m.dim()}, {"sigma", m.sigma()}, {"components", comps}};
}

inline SphericalMixture spherical_from_json(const Json& j, MixtureConstraints constraints = {}) {
  try {
    std::vector<Vector> means;
    std::vector<double> weights;
    for (const auto& c : j.at("components")) {
      weights.push_back(c.at("weight").get<double>());
      means.push_back(vector_from_json(c.at("mean")));
    }
    SphericalMixture m(std::move(means), std::move(weights), j.at("sigma").get<double>(), constraints);
    if (j.contains("dim") && j.at("dim").get<int>() != m.dim()) throw Error("mixture json: dim disagrees with means");
    return m;
  } catch (const Json::exception& e) {
    throw Error(std::string("mixture json: ") + e.what());
  }
}

inline Json to_json(const SignedMixture& m) {
  Json comps = Json::array();
  for (Eigen::Index i = 0; i < m.size(); ++i)
    comps.push_back({{"weight", m.weights()(i)},
                     {"mean", to_json(Vector(m.means().row(i).transpose()))},
                     {"sigma", m.sigmas()(i)}});
  return {{"dim", m.dim()}, {"components", comps}};
}

inline SignedMixture signed_from_json(const Json& j) {
  try {
    SignedMixture m(j.at("dim").get<int>());
    for (const auto& c : j.at("components"))
      m.add(c.at("weight").get<double>(), vector_from_json(c.at("mean")), c.at("sigma").get<double>());
    return m;
  } catch (const Json::exception& e) {
    throw Error(std::string("signed mixture json: ") + e.what());
  }
}

inline Json to_json(const KdeEstimate& kde) {
  Json j = to_json(kde.mixture);
  j["bandwidth"] = kde.bandwidth;
  j["source_n"] = kde.source_n;
  return j;
}

inline KdeEstimate kde_from_json(const Json& j) {
  try {
    return KdeEstimate{signed_from_json(j), j.at("bandwidth").get<double>(), j.at("source_n").get<std::size_t>()};
  } catch (const Json::exception& e) {
    throw Error(std::string("kde json: ") + e.what());
  }
}

inline Json to_json(const ProjectionBasis& b) {
  Json rows = Json::array();
  for (int i = 0; i < b.k(); ++i) rows.push_back(to_json(Vector(b.vectors.row(i).transpose())));
  return {{"k", b.k()}, {"dim", b.ambient_dim()}, {"vectors", rows}, {"singular_values", to_json(b.singular_values)}};
}

inline ProjectionBasis basis_from_json(const Json& j) {
  try {
    const auto& rows = j.at("vectors");
    const auto k = static_cast<Eigen::Index>(rows.size());
    detail::require(k >= 1, "basis json: no vectors");
    const auto dim = static_cast<Eigen::Index>(rows.at(0).size());
    ProjectionBasis b{RowMatrix(k, dim), vector_from_json(j.at("singular_values"))};
    for (Eigen::Index i = 0; i < k; ++i) {
      const Vector v = vector_from_json(rows.at(static_cast<std::size_t>(i)));
      detail::require(v.size() == dim, "basis json: ragged vectors");
      b.vectors.row(i) = v.transpose();
    }
    return b;
  } catch (const Json::exception& e) {
    throw Error(std::string("basis json: ") + e.what());
  }
}

inline Json to_json(const Theta& t) {
  Json means = Json::array();
  for (const auto& m : t.means) means.push_back(to_json(m));
  return {{"means", means}, {"weights", t.weights}};
}

inline Json to_json(const SearchResult& r, bool with_trace = false) {
  Json rounds = Json::array();
  for (const auto& s : r.rounds)
    rounds.push_back({{"mean_step", s.mean_step},
                      {"weight_step", s.weight_step},
                      {"points", s.points},
                      {"reduced_objective", s.reduced_objective}});
  Json j = {{"theta_star", to_json(r.theta_star)},
            {"objective", r.kde_self_norm ? Json(r.objective) : Json(nullptr)},
            {"reduced_objective", r.reduced_objective},
            {"kde_self_norm", r.kde_self_norm ? Json(*r.kde_self_norm) : Json(nullptr)},
            {"evaluations", r.evaluations},
            {"sigma", r.sigma},
            {"effective_sigma", r.effective_sigma},
            {"bandwidth", r.bandwidth},
            {"rounds", rounds}};
  if (with_trace) {
    Json trace = Json::array();
    for (const auto& t : r.trace)
      trace.push_back({{"round", t.round}, {"index", t.index}, {"theta", to_json(t.theta)}, {"objective", t.objective}});
    j["trace"] = trace;
  }
  return j;
}

inline Json to_json(const ComponentMatch& m) {
  return {{"permutation", m.permutation},       {"mean_errors", m.mean_errors},
          {"weight_errors", m.weight_errors},   {"max_mean_error", m.max_mean_error},
          {"max_weight_error", m.max_weight_error}};
}

inline void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline std::string to_csv(const SampleMatrix& s) {
  std::string out;
  for (int d = 0; d < s.dim(); ++d) {
    if (d) out += ',';
    out += "x" + std::to_string(d);
  }
  out += '\n';
  out.reserve(out.size() + static_cast<std::size_t>(s.size() * s.dim()) * 22);
  for (Eigen::Index r = 0; r < s.size(); ++r) {
    for (int d = 0; d < s.dim(); ++d) {
      if (d) out += ',';
      append_double(out, s.data(r, d));
    }
    out += '\n';
  }
  return out;
}

/// One JSON array per line.
inline std::string to_ndjson(const SampleMatrix& s) {
  std::string out;
  for (Eigen::Index r = 0; r < s.size(); ++r) {
    out += '[';
    for (int d = 0; d < s.dim(); ++d) {
      if (d) out += ',';
      append_double(out, s.data(r, d));
    }
    out += "]\n";
  }
  return out;
}

namespace parse {

inline double parse_double(std::string_view tok, std::size_t line) {
  while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw Error("csv: line " + std::to_string(line) + ": cannot parse '" + std::string(tok) + "' as a number");
  return v;
}

}  // namespace parse

/// Numeric CSV with a header row. Every data row must have the header's width.
inline SampleMatrix samples_from_csv(std::string_view text) {
  std::vector<double> values;
  std::size_t width = 0, rows = 0, line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::size_t cols = 1;
    for (char c : line) cols += c == ',';
    if (line_no == 1) {
      width = cols;
      continue;
    }
    if (cols != width)
      throw Error("csv: line " + std::to_string(line_no) + " has " + std::to_string(cols) + " fields, header has " +
                  std::to_string(width));
    std::size_t b = 0;
    while (true) {
      const auto c = line.find(',', b);
      values.push_back(parse::parse_double(line.substr(b, c == std::string_view::npos ? line.size() - b : c - b), line_no));
      if (c == std::string_view::npos) break;
      b = c + 1;
    }
    ++rows;
  }
  if (rows == 0) throw Error("csv: no data rows");
  SampleMatrix s{RowMatrix(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width)), 0};
  std::copy(values.begin(), values.end(), s.data.data());
  return s;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + p.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write failed: " + p.string());
}

inline Json read_json(const std::filesystem::path& p) {
  try {
    return Json::parse(read_file(p));
  } catch (const Json::parse_error& e) {
    throw Error(p.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& p, const Json& j) { write_file(p, j.dump(2) + "\n"); }

}  // namespace io
}  // namespace gmmgrid
