#pragma once

#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcls/errors.hpp"
#include "dcls/experiments.hpp"
#include "dcls/index_sets.hpp"
#include "dcls/jacobi.hpp"
#include "dcls/least_squares.hpp"
#include "dcls/model_selection.hpp"
#include "dcls/sampling.hpp"

namespace dcls {

using json = nlohmann::json;

inline constexpr std::string_view kCsvSchema = "# schema: dclsq/1";
inline constexpr std::string_view kVersion = "1.0.0";

// Index sets: array of dense exponent arrays in canonical order.

inline json to_json(const IndexSet& set, std::size_t d = 0) {
  d = std::max<std::size_t>({d, set.dimension(), set.max_coordinate()});
  json a = json::array();
  for (auto& nu : set) a.push_back(nu.dense(d));
  return a;
}

inline IndexSet index_set_from_json(const json& j) {
  if (!j.is_array()) throw DomainError("index set JSON must be an array of exponent arrays");
  std::vector<MultiIndex> members;
  std::size_t d = 0;
  for (auto& row : j) {
    if (!row.is_array()) throw DomainError("index set member must be an array");
    std::vector<std::uint32_t> v;
    for (auto& x : row) {
      if (!x.is_number_integer() || x.get<long long>() < 0) throw DomainError("exponents must be non-negative integers");
      v.push_back(x.get<std::uint32_t>());
    }
    d = std::max(d, v.size());
    members.push_back(MultiIndex::from_dense(v));
  }
  return IndexSet(std::move(members), d);
}

// Encodings: hex bitstring or integer array.

inline json to_json(const Encoding& e) {
  return std::visit([](const auto& x) -> json {
    using T = std::decay_t<decltype(x)>;
    if constexpr (std::is_same_v<T, BitstreamEncoding>)
      return {{"variant", "bitstream"}, {"d", x.d}, {"bits", x.bits.size()}, {"hex", bits_to_hex(x.bits)}};
    else
      return {{"variant", "pointer"}, {"d", x.d}, {"tuple", x.tuple}};
  }, e);
}

inline Encoding encoding_from_json(const json& j) {
  std::string v = j.at("variant").get<std::string>();
  if (v == "bitstream") {
    std::size_t nbits = j.at("bits").get<std::size_t>();
    return BitstreamEncoding{hex_to_bits(j.at("hex").get<std::string>(), nbits), j.at("d").get<std::size_t>()};
  }
  if (v == "pointer") return PointerEncoding{j.at("tuple").get<std::vector<std::uint32_t>>(), j.at("d").get<std::size_t>()};
  throw MalformedEncoding("unknown encoding variant '" + v + "'");
}

// Params: {"theta1", "theta2"} or an alias string.

inline json to_json(const JacobiParams& p) { return {{"theta1", p.theta1()}, {"theta2", p.theta2()}}; }

inline JacobiParams params_from_json(const json& j) {
  if (j.is_string()) return JacobiParams::parse(j.get<std::string>());
  return JacobiParams(j.at("theta1").get<double>(), j.at("theta2").get<double>());
}

inline json to_json(const Fit& f) {
  return {{"params", to_json(f.params)},
          {"index_set", to_json(f.index_set)},
          {"coefficients", f.coefficients},
          {"m", f.m},
          {"gramian_min_eig", f.gramian_min_eig},
          {"gramian_max_eig", f.gramian_max_eig},
          {"residual_empirical", f.residual_empirical}};
}

inline json to_json(const SelectionResult& r) {
  json j{{"family", std::string(to_string(r.family))},
         {"n", r.n},
         {"method", to_string(r.method)},
         {"chosen_set", to_json(r.chosen_set)},
         {"fit", to_json(r.fit)},
         {"empirical_error", r.empirical_error},
         {"sets_examined", r.sets_examined},
         {"rank_deficient_skipped", r.rank_deficient_skipped},
         {"stopped_early", r.stopped_early}};
  if (r.method == SelectionMethod::relaxed) {
    j["relax_factor"] = r.relax_factor;
    j["relax_fraction"] = r.relax_fraction;
    j["certified_factor"] = r.certified_factor ? json(*r.certified_factor) : json(nullptr);
  }
  return j;
}

inline json to_json(const BestNTermResult& r) {
  json table = json::array();
  for (std::size_t k = 0; k < r.working_superset.size(); ++k)
    table.push_back({{"nu", r.working_superset[k].dense(std::max<std::size_t>(1, r.working_superset.max_coordinate()))},
                     {"coefficient", r.coefficient_table[k]}});
  return {{"family", std::string(to_string(r.family))},
          {"n", r.n},
          {"optimal_set", to_json(r.optimal_set)},
          {"projection_coefficients", r.projection_coefficients},
          {"sigma_n", r.sigma_n},
          {"retained_tail", r.retained_tail},
          {"tail_estimate", r.tail_estimate},
          {"shell_energy", r.shell_energy},
          {"tail_warning", r.tail_warning},
          {"sets_examined", r.sets_examined},
          {"coefficient_table", table}};
}

// Sample sets: CSV body (one point per row) plus a JSON sidecar.

inline std::string samples_to_csv(const SampleSet& s) {
  std::string out;
  for (std::size_t i = 0; i < s.m; ++i) {
    for (std::size_t j = 0; j < s.d; ++j) {
      if (j) out += ',';
      out += format_real(s.points[i * s.d + j]);
    }
    out += '\n';
  }
  return out;
}

inline json samples_sidecar(const SampleSet& s) {
  return {{"seed", s.seed}, {"theta1", s.params.theta1()}, {"theta2", s.params.theta2()}, {"m", s.m}, {"d", s.d}};
}

inline SampleSet samples_from_csv(std::string_view csv, const json& sidecar) {
  SampleSet s;
  s.params = JacobiParams(sidecar.at("theta1").get<double>(), sidecar.at("theta2").get<double>());
  s.seed = sidecar.at("seed").get<std::uint64_t>();
  s.m = sidecar.at("m").get<std::size_t>();
  s.d = sidecar.at("d").get<std::size_t>();
  std::istringstream in{std::string(csv)};
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::size_t cols = 0;
    for (std::string cell; std::getline(row, cell, ',');) {
      double v = std::stod(cell);
      if (!(v >= -1.0 && v <= 1.0)) throw DomainError("sample coordinate outside [-1,1]");
      s.points.push_back(v);
      ++cols;
    }
    if (cols != s.d) throw DimensionMismatch("sample row width differs from sidecar d");
  }
  if (s.points.size() != s.m * s.d) throw DimensionMismatch("sample row count differs from sidecar m");
  return s;
}

// Tables: RFC-4180 body preceded by the schema line.

inline std::string csv_escape(std::string_view cell) {
  if (cell.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(cell);
  std::string out = "\"";
  for (char ch : cell) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

inline std::string to_csv(const Table& t) {
  std::string out(kCsvSchema);
  out += "\r\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out += ',';
      out += csv_escape(cells[k]);
    }
    out += "\r\n";
  };
  line(t.columns);
  for (auto& r : t.rows) line(r);
  return out;
}

inline json to_json(const Table& t) {
  json rows = json::array();
  for (auto& r : t.rows) {
    json o = json::object();
    for (std::size_t k = 0; k < t.columns.size() && k < r.size(); ++k) o[t.columns[k]] = r[k];
    rows.push_back(o);
  }
  return rows;
}

inline json to_json(const Report& r) { return {{"kind", r.kind}, {"summary", r.summary}, {"rows", to_json(r.table)}}; }

} // namespace dcls
