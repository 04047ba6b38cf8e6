#include "relbn/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace relbn {

using json = nlohmann::json;

std::vector<std::string> SampleSet::column_names() const {
  std::vector<std::string> names;
  for (int id : generator_ids) names.push_back("G" + std::to_string(id));
  for (int id : line_ids) names.push_back("L" + std::to_string(id));
  for (int bus : load_buses) names.push_back("B" + std::to_string(bus));
  names.emplace_back("LOL");
  names.emplace_back("WEIGHT");
  return names;
}

SampleSet make_sample_set(const GridCase& grid) {
  SampleSet set;
  set.fingerprint = fingerprint(grid);
  for (const auto& g : grid.generators) set.generator_ids.push_back(g.id);
  for (const auto& l : grid.lines) set.line_ids.push_back(l.id);
  set.load_buses = grid.load_buses();
  return set;
}

SampleRecord build_record(const SystemState& state, const CurtailmentSolution& solution) {
  if (solution.dispatch.size() != state.gen_down.size() || solution.flows.size() != state.line_down.size())
    throw DatasetError("state and curtailment solution have inconsistent dimensions");
  SampleRecord record;
  record.g_bits = state.gen_down;
  record.l_bits = state.line_down;
  record.b_bits.reserve(solution.curtailment.size());
  for (double c : solution.curtailment) record.b_bits.push_back(c > kCurtailmentThresholdMw ? 1 : 0);
  // LOL is the OR of the bus bits, so sub-threshold residues spread over
  // several buses never yield a loss event without a curtailed bus.
  record.lol = std::find(record.b_bits.begin(), record.b_bits.end(), 1) != record.b_bits.end() ? 1 : 0;
  record.weight = state.weight;
  return record;
}

namespace {

std::string format_weight(double w) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", w);
  return buffer;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  return out;
}

std::vector<int> parse_block(const std::vector<std::string>& header, std::size_t& pos, char prefix) {
  std::vector<int> ids;
  while (pos < header.size() && header[pos].size() > 1 && header[pos][0] == prefix) {
    int id = 0;
    const auto& cell = header[pos];
    auto [ptr, ec] = std::from_chars(cell.data() + 1, cell.data() + cell.size(), id);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) throw DatasetError("bad header column '" + cell + "'");
    ids.push_back(id);
    ++pos;
  }
  return ids;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void write_dataset(const SampleSet& set, std::ostream& csv, std::ostream& manifest) {
  const std::size_t ng = set.generator_ids.size(), nl = set.line_ids.size(), nb = set.load_buses.size();
  csv << join(set.column_names()) << '\n';
  std::string row;
  for (const auto& r : set.records) {
    if (r.g_bits.size() != ng || r.l_bits.size() != nl || r.b_bits.size() != nb)
      throw DatasetError("record dimensions do not match the sample set");
    row.clear();
    for (auto b : r.g_bits) (row += static_cast<char>('0' + b)) += ',';
    for (auto b : r.l_bits) (row += static_cast<char>('0' + b)) += ',';
    for (auto b : r.b_bits) (row += static_cast<char>('0' + b)) += ',';
    (row += static_cast<char>('0' + r.lol)) += ',';
    row += format_weight(r.weight);
    csv << row << '\n';
  }

  json doc;
  doc["case"] = set.fingerprint.name;
  doc["checksum"] = set.fingerprint.checksum;
  doc["generators"] = ng;
  doc["lines"] = nl;
  doc["load_buses"] = nb;
  doc["records"] = set.records.size();
  doc["metadata"] = set.metadata;
  manifest << doc.dump(2) << '\n';
}

SampleSet read_dataset(std::istream& csv, std::istream& manifest) {
  json doc;
  try {
    doc = json::parse(manifest);
  } catch (const json::exception& e) {
    throw DatasetError(std::string("malformed manifest: ") + e.what());
  }

  SampleSet set;
  std::size_t declared_g = 0, declared_l = 0, declared_b = 0, declared_records = 0;
  try {
    set.fingerprint = {doc.at("case").get<std::string>(), doc.at("checksum").get<std::string>()};
    declared_g = doc.at("generators").get<std::size_t>();
    declared_l = doc.at("lines").get<std::size_t>();
    declared_b = doc.at("load_buses").get<std::size_t>();
    declared_records = doc.at("records").get<std::size_t>();
    if (doc.contains("metadata")) set.metadata = doc["metadata"].get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw DatasetError(std::string("manifest missing fields: ") + e.what());
  }

  std::string line;
  if (!std::getline(csv, line)) throw DatasetError("dataset has no header");
  const auto header = split(line);
  std::size_t pos = 0;
  set.generator_ids = parse_block(header, pos, 'G');
  set.line_ids = parse_block(header, pos, 'L');
  set.load_buses = parse_block(header, pos, 'B');
  if (header.size() != pos + 2 || header[pos] != "LOL" || header[pos + 1] != "WEIGHT")
    throw DatasetError("header must end with LOL,WEIGHT after the G, L and B blocks");
  if (set.generator_ids.size() != declared_g || set.line_ids.size() != declared_l ||
      set.load_buses.size() != declared_b)
    throw DatasetError("header dimensions do not match the manifest for case '" + set.fingerprint.name + "'");

  const std::size_t ng = declared_g, nl = declared_l, nb = declared_b, width = ng + nl + nb + 2;
  std::size_t line_no = 1;
  while (std::getline(csv, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    auto fail = [&](const std::string& why) {
      throw DatasetError("malformed row at line " + std::to_string(line_no) + ": " + why);
    };
    if (cells.size() != width) fail("expected " + std::to_string(width) + " cells, got " + std::to_string(cells.size()));
    SampleRecord r;
    auto bit = [&](std::size_t i) -> std::uint8_t {
      if (cells[i] == "0") return 0;
      if (cells[i] == "1") return 1;
      fail("cell " + std::to_string(i + 1) + " ('" + cells[i] + "') is not 0 or 1");
      return 0;
    };
    r.g_bits.reserve(ng);
    r.l_bits.reserve(nl);
    r.b_bits.reserve(nb);
    for (std::size_t i = 0; i < ng; ++i) r.g_bits.push_back(bit(i));
    for (std::size_t i = 0; i < nl; ++i) r.l_bits.push_back(bit(ng + i));
    for (std::size_t i = 0; i < nb; ++i) r.b_bits.push_back(bit(ng + nl + i));
    r.lol = bit(ng + nl + nb);
    const auto& w = cells[width - 1];
    char* end = nullptr;
    r.weight = std::strtod(w.c_str(), &end);
    if (w.empty() || end != w.c_str() + w.size() || !std::isfinite(r.weight) || r.weight <= 0.0)
      fail("weight '" + w + "' is not a positive number");
    const bool any_bus = std::find(r.b_bits.begin(), r.b_bits.end(), 1) != r.b_bits.end();
    if (any_bus != (r.lol == 1)) fail("LOL must equal the OR of the B columns");
    set.records.push_back(std::move(r));
  }
  if (set.records.size() != declared_records)
    throw DatasetError("manifest declares " + std::to_string(declared_records) + " records, found " +
                       std::to_string(set.records.size()));
  return set;
}

std::filesystem::path manifest_path(const std::filesystem::path& csv) {
  auto path = csv;
  path += ".manifest.json";
  return path;
}

void write_dataset(const SampleSet& set, const std::filesystem::path& csv) {
  std::ofstream data(csv, std::ios::binary), manifest(manifest_path(csv), std::ios::binary);
  if (!data || !manifest) throw DatasetError("cannot open '" + csv.string() + "' for writing");
  write_dataset(set, data, manifest);
}

SampleSet read_dataset(const std::filesystem::path& csv) {
  std::ifstream data(csv, std::ios::binary), manifest(manifest_path(csv), std::ios::binary);
  if (!data) throw DatasetError("cannot open '" + csv.string() + "'");
  if (!manifest) throw DatasetError("missing manifest '" + manifest_path(csv).string() + "'");
  return read_dataset(data, manifest);
}

}  // namespace relbn
