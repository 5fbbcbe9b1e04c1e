#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "qbench/errors.hpp"
#include "qbench/hamiltonian.hpp"

namespace qbench {

// The seven targeted eigenvalues of a dissociation sweep. Column suffixes follow
// the legend labels of the dissociation plots: g = N_e=2 singlet ground,
// 1 = N_e=1, 2 = s_z=0 triplet, 3 = N_e=3; "_max" marks subspace maximization.
enum class Target { g, ne1, triplet, ne3, g_max, ne1_max, ne3_max };

inline constexpr std::array<Target, 7> kAllTargets = {Target::g,     Target::ne1,     Target::triplet, Target::ne3,
                                                      Target::g_max, Target::ne1_max, Target::ne3_max};

struct TargetSpec {
  const char* suffix;
  SymmetrySector sector;
  bool maximize = false;
  bool fixed = false;  // parameter-free circuit, evaluated rather than optimized
};

inline TargetSpec target_spec(Target t) {
  switch (t) {
    case Target::g: return {"g", SymmetrySector::make(2, 0), false, false};
    case Target::ne1: return {"1", SymmetrySector::make(1, 0.5), false, false};
    case Target::triplet: return {"2", SymmetrySector::make(2, 0), false, true};
    case Target::ne3: return {"3", SymmetrySector::make(3, 0.5), false, false};
    case Target::g_max: return {"g_max", SymmetrySector::make(2, 0), true, false};
    case Target::ne1_max: return {"1_max", SymmetrySector::make(1, 0.5), true, false};
    case Target::ne3_max: return {"3_max", SymmetrySector::make(3, 0.5), true, false};
  }
  throw ValidationError("unknown target");
}

inline std::size_t target_index(Target t) { return static_cast<std::size_t>(t); }

/// Parses "all", "none" or a comma list of column suffixes (g,1,2,3,g_max,1_max,3_max).
inline std::vector<Target> parse_targets(std::string_view text) {
  if (text == "all") return {kAllTargets.begin(), kAllTargets.end()};
  std::vector<Target> out;
  if (text.empty() || text == "none") return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    const std::string_view item = text.substr(start, end - start);
    bool found = false;
    for (Target t : kAllTargets) {
      if (item == target_spec(t).suffix) {
        if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
        found = true;
      }
    }
    if (!found) throw ValidationError(fmt::format("unknown target '{}'", item));
    start = end + 1;
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Oracle value of a target. energy_g_max is the largest eigenvalue of the whole
/// N_e=2, s_z=0 block, which can be the triplet.
inline double exact_target_energy(const QubitHamiltonian& h, Target t) {
  const TargetSpec spec = target_spec(t);
  if (spec.fixed) return expectation(triplet_state(), h.terms);
  const Spectrum s = exact_spectrum(extract_block(h, spec.sector));
  return spec.maximize ? s.eigenvalues.maxCoeff() : s.eigenvalues.minCoeff();
}

struct Cell {
  double energy = std::numeric_limits<double>::quiet_NaN();
  double std_error = std::numeric_limits<double>::quiet_NaN();
  double exact = std::numeric_limits<double>::quiet_NaN();
  int evaluations = 0;
  bool converged = false;
  std::string error;  // empty on success

  double abs_error() const { return std::abs(energy - exact); }
};

struct ScanRow {
  std::string molecule;
  double distance = 0.0;
  std::array<std::optional<Cell>, 7> cells;

  const std::optional<Cell>& operator[](Target t) const { return cells[target_index(t)]; }
  std::optional<Cell>& operator[](Target t) { return cells[target_index(t)]; }
};

inline std::string csv_header() {
  std::string h = "distance";
  for (const char* prefix : {"energy_", "stderr_", "exact_"}) {
    for (Target t : kAllTargets) h += fmt::format(",{}{}", prefix, target_spec(t).suffix);
  }
  return h + ",molecule,status";
}

namespace detail {

inline std::string csv_number(double v) { return std::isnan(v) ? std::string() : fmt::format("{:.12f}", v); }

inline std::string csv_text(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  }
  return s;
}

}  // namespace detail

inline std::string csv_line(const ScanRow& row) {
  std::string line = fmt::format("{:.6f}", row.distance);
  auto field = [&](auto get) {
    for (Target t : kAllTargets) line += "," + (row[t] ? detail::csv_number(get(*row[t])) : std::string());
  };
  field([](const Cell& c) { return c.energy; });
  field([](const Cell& c) { return c.std_error; });
  field([](const Cell& c) { return c.exact; });
  std::string status = "ok";
  for (Target t : kAllTargets) {
    if (row[t] && !row[t]->error.empty()) {
      status = fmt::format("{}: {}", target_spec(t).suffix, row[t]->error);
      break;
    }
  }
  return line + "," + detail::csv_text(row.molecule) + "," + detail::csv_text(status);
}

inline void write_csv(std::ostream& out, const std::vector<ScanRow>& rows) {
  out << csv_header() << '\n';
  for (const auto& r : rows) out << csv_line(r) << '\n';
}

}  // namespace qbench
