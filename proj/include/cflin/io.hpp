#pragma once

// File formats: field / model ingestion (JSON) and CSV dumps of matrices,
// trajectories and error surfaces. Numbers are written with %.17g so that a
// rerun with identical inputs produces byte-identical files.

#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cflin/analysis.hpp"
#include "cflin/carleman_classical.hpp"
#include "cflin/carleman_fourier.hpp"
#include "cflin/fourier_field.hpp"
#include "cflin/integrate.hpp"
#include "cflin/kuramoto.hpp"

namespace cflin::io {

using nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using AnyField = std::variant<FourierField1D, QuasiPeriodicField>;

namespace detail {

inline std::pair<double, std::optional<double>> read_envelope(const json& j) {
  double r = 0.5;
  std::optional<double> D;
  if (auto it = j.find("envelope"); it != j.end() && !it->is_null()) {
    if (it->contains("r")) r = it->at("r").get<double>();
    if (auto dt = it->find("D"); dt != it->end() && !dt->is_null()) D = dt->get<double>();
  }
  return {r, D};
}

}  // namespace detail

/// Parses a field description. The 1-D shorthand ({"coeffs":[{"n":..}]})
/// yields a FourierField1D; the general form yields a QuasiPeriodicField.
/// Component indices "p" are 1-based in the file.
inline AnyField parse_field(const json& j) {
  try {
    const auto [r, D] = detail::read_envelope(j);
    const json& coeffs = j.at("coeffs");
    const bool shorthand = !coeffs.empty() && coeffs.front().contains("n");
    if (shorthand || (coeffs.empty() && !j.contains("d"))) {
      std::map<int, Complex> g;
      for (const json& c : coeffs) g[c.at("n").get<int>()] += Complex(c.at("re").get<double>(), c.value("im", 0.0));
      return FourierField1D(std::move(g), r, D);
    }
    const int d = j.at("d").get<int>();
    const int L = j.value("L", 1);
    std::vector<double> taus = j.contains("taus") ? j.at("taus").get<std::vector<double>>() : std::vector<double>{1.0};
    if (static_cast<int>(taus.size()) != L) throw FormatError("taus length does not match L");
    std::map<QPKey, Complex> g;
    for (const json& c : coeffs) {
      const auto alphas = c.at("alphas").get<std::vector<std::vector<int>>>();
      if (static_cast<int>(alphas.size()) != L) throw FormatError("alphas must hold L frequency vectors");
      QPKey key{c.at("p").get<int>() - 1, {}};
      for (const auto& a : alphas) {
        if (static_cast<int>(a.size()) != d) throw FormatError("frequency vector length must equal d");
        key.alphas.insert(key.alphas.end(), a.begin(), a.end());
      }
      g[key] += Complex(c.at("re").get<double>(), c.value("im", 0.0));
    }
    return QuasiPeriodicField(d, std::move(taus), std::move(g), r, D);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed field file: ") + e.what());
  }
}

inline AnyField read_field(std::istream& in) {
  try {
    return parse_field(json::parse(in));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed field file: ") + e.what());
  }
}

inline KuramotoModel parse_model(const json& j) {
  try {
    KuramotoModel m;
    m.d = j.at("d").get<int>();
    m.omegas = j.at("omegas").get<std::vector<double>>();
    m.K = j.at("K").get<double>();
    m.theta0 = j.at("theta0").get<std::vector<double>>();
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
}

inline json to_json(const KuramotoModel& m) {
  return json{{"d", m.d}, {"omegas", m.omegas}, {"K", m.K}, {"theta0", m.theta0}};
}

/// row,col,value with 1-based indices, nonzeros only.
inline void write_classical_matrix(std::ostream& out, const ClassicalSystem& sys) {
  out << "row,col,value\n";
  for (int i = 0; i < sys.N; ++i)
    for (int j = 0; j < sys.N; ++j)
      if (sys.A(i, j) != 0.0) out << i + 1 << ',' << j + 1 << ',' << num(sys.A(i, j)) << '\n';
}

/// k,l,row,col,re,im with 0-based in-block indices.
inline void write_blocks(std::ostream& out, const BlockMap& blocks) {
  out << "k,l,row,col,re,im\n";
  for (const auto& [kl, block] : blocks)
    for (const BlockEntry& e : block)
      out << kl.first << ',' << kl.second << ',' << e.row << ',' << e.col << ',' << num(e.value.real()) << ','
          << num(e.value.imag()) << '\n';
}

/// grade,position,gamma1,..,gammam for grades 1..N.
inline void write_layout(std::ostream& out, const MultiIndexTable& table, int N) {
  out << "grade,position";
  for (int i = 1; i <= table.ambient(); ++i) out << ",gamma" << i;
  out << '\n';
  for (int k = 1; k <= N; ++k) {
    const auto& g = table.grade(k);
    for (std::size_t pos = 0; pos < g.size(); ++pos) {
      out << k << ',' << pos;
      for (int v : g[pos]) out << ',' << v;
      out << '\n';
    }
  }
}

/// t,comp0,comp1,.. (at most `max_components` columns when given).
inline void write_trajectory(std::ostream& out, const RealTrajectory& traj,
                             std::optional<std::size_t> max_components = std::nullopt) {
  const std::size_t n = traj.states.empty() ? 0 : static_cast<std::size_t>(traj.states.front().size());
  const std::size_t cols = max_components ? std::min(n, *max_components) : n;
  out << 't';
  for (std::size_t c = 0; c < cols; ++c) out << ",comp" << c;
  out << '\n';
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    out << num(traj.grid.samples[i]);
    for (std::size_t c = 0; c < cols; ++c) out << ',' << num(traj.states[i][static_cast<Eigen::Index>(c)]);
    out << '\n';
  }
}

/// t,comp0_re,comp0_im,..
inline void write_trajectory(std::ostream& out, const ComplexTrajectory& traj,
                             std::optional<std::size_t> max_components = std::nullopt) {
  const std::size_t n = traj.states.empty() ? 0 : static_cast<std::size_t>(traj.states.front().size());
  const std::size_t cols = max_components ? std::min(n, *max_components) : n;
  out << 't';
  for (std::size_t c = 0; c < cols; ++c) out << ",comp" << c << "_re,comp" << c << "_im";
  out << '\n';
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    out << num(traj.grid.samples[i]);
    for (std::size_t c = 0; c < cols; ++c) {
      const Complex z = traj.states[i][static_cast<Eigen::Index>(c)];
      out << ',' << num(z.real()) << ',' << num(z.imag());
    }
    out << '\n';
  }
}

/// theta0,t,value, row-major over theta0 then t.
inline void write_surface(std::ostream& out, const ErrorSurface& s) {
  out << "theta0,t,value\n";
  for (std::size_t i = 0; i < s.theta0_axis.size(); ++i)
    for (std::size_t j = 0; j < s.t_axis.size(); ++j)
      out << num(s.theta0_axis[i]) << ',' << num(s.t_axis[j]) << ',' << num(s.values[i][j]) << '\n';
}

inline json trajectory_meta(const TrajectoryMeta& m) {
  json j{{"method", m.method},
         {"tol", m.tol},
         {"accepted_steps", m.accepted_steps},
         {"rejected_steps", m.rejected_steps},
         {"rhs_evaluations", m.rhs_evaluations},
         {"diverged", m.diverged}};
  j["divergence_time"] = m.diverged ? json(m.divergence_time) : json(nullptr);
  return j;
}

}  // namespace cflin::io
