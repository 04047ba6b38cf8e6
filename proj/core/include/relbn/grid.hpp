#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace relbn {

struct Bus {
  int id = 0;
  bool is_slack = false;
};

struct Generator {
  int id = 0;
  int bus = 0;
  double p_min = 0.0;  // MW
  double p_max = 0.0;  // MW
  double for_prob = 0.0;
};

/// A transmission branch. Transformers are carried as lines with their own
/// reactance, rating and forced outage rate.
struct Line {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double reactance = 0.0;  // per unit
  double rating = 0.0;     // MW
  double for_prob = 0.0;
};

struct Load {
  int bus = 0;
  double demand = 0.0;  // MW
  double weight = 1.0;  // curtailment priority
};

/// Static network description. Immutable once built; share freely.
struct GridCase {
  std::string name;
  double base_mva = 100.0;
  std::string provenance;
  /// Declared system peak, checked against the sum of load demands.
  std::optional<double> total_demand_mw;

  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Line> lines;
  std::vector<Load> loads;

  double total_demand() const;
  double total_capacity() const;

  /// Position of a bus id in `buses`; throws std::out_of_range.
  std::size_t bus_index(int bus_id) const;
  int slack_bus() const;
  /// Load bus ids in load order.
  std::vector<int> load_buses() const;
};

/// Raised by parse_case for malformed or semantically invalid case text.
class CaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ValidationReport {
  /// One entry per violated invariant, each naming the offending record.
  std::vector<std::string> violations;
  /// Non-fatal findings (e.g. capacity below demand).
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
};

ValidationReport validate_case(const GridCase& grid);

GridCase parse_case(std::string_view text);
std::string serialize_case(const GridCase& grid);

/// Names accepted by builtin_case.
std::vector<std::string> builtin_case_names();
/// Raw bytes of a bundled case file.
std::string_view builtin_case_text(std::string_view name);
GridCase builtin_case(std::string_view name);

/// Bundled case name or path to a case file.
GridCase load_case(const std::string& name_or_path);

/// Returns a copy with every load demand multiplied by `factor`.
GridCase scale_loads(GridCase grid, double factor);

/// Identifies a case by name plus a checksum of its canonical serialization.
struct CaseFingerprint {
  std::string name;
  std::string checksum;

  bool operator==(const CaseFingerprint&) const = default;
};

CaseFingerprint fingerprint(const GridCase& grid);

}  // namespace relbn
