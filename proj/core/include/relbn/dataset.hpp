#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "relbn/curtailment.hpp"
#include "relbn/grid.hpp"
#include "relbn/state.hpp"

namespace relbn {

/// Curtailment above this many MW counts as load loss.
inline constexpr double kCurtailmentThresholdMw = 1e-6;

/// One training row: G block, L block, B block (one bit per load bus), LOL.
struct SampleRecord {
  std::vector<std::uint8_t> g_bits;
  std::vector<std::uint8_t> l_bits;
  std::vector<std::uint8_t> b_bits;
  std::uint8_t lol = 0;
  double weight = 1.0;

  bool operator==(const SampleRecord&) const = default;
};

struct SampleSet {
  CaseFingerprint fingerprint;
  std::vector<int> generator_ids;
  std::vector<int> line_ids;
  std::vector<int> load_buses;
  std::vector<SampleRecord> records;
  /// Free-form key/value pairs carried in the manifest (run configuration).
  std::map<std::string, std::string> metadata;

  bool operator==(const SampleSet&) const = default;

  /// Header columns: G<id>..., L<id>..., B<bus>..., LOL, WEIGHT.
  std::vector<std::string> column_names() const;
  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

/// Empty set shaped for `grid`.
SampleSet make_sample_set(const GridCase& grid);

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

SampleRecord build_record(const SystemState& state, const CurtailmentSolution& solution);

void write_dataset(const SampleSet& set, std::ostream& csv, std::ostream& manifest);
SampleSet read_dataset(std::istream& csv, std::istream& manifest);

/// Sidecar manifest path for a CSV path: "<csv>.manifest.json".
std::filesystem::path manifest_path(const std::filesystem::path& csv);
void write_dataset(const SampleSet& set, const std::filesystem::path& csv);
SampleSet read_dataset(const std::filesystem::path& csv);

}  // namespace relbn
