#include "relbn/grid.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "builtin_cases.hpp"
#include "checksum.hpp"

namespace relbn {

using json = nlohmann::ordered_json;

double GridCase::total_demand() const {
  double total = 0.0;
  for (const auto& load : loads) total += load.demand;
  return total;
}

double GridCase::total_capacity() const {
  double total = 0.0;
  for (const auto& gen : generators) total += gen.p_max;
  return total;
}

std::size_t GridCase::bus_index(int bus_id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == bus_id) return i;
  throw std::out_of_range("unknown bus " + std::to_string(bus_id));
}

int GridCase::slack_bus() const {
  for (const auto& bus : buses)
    if (bus.is_slack) return bus.id;
  throw std::logic_error("case '" + name + "' has no slack bus");
}

std::vector<int> GridCase::load_buses() const {
  std::vector<int> ids;
  ids.reserve(loads.size());
  for (const auto& load : loads) ids.push_back(load.bus);
  return ids;
}

namespace {

std::string tag(std::string_view kind, std::size_t pos, int id) {
  std::ostringstream os;
  os << kind << "[" << pos << "] (id " << id << ")";
  return os.str();
}

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p < 1.0; }

}  // namespace

ValidationReport validate_case(const GridCase& grid) {
  ValidationReport report;
  auto violation = [&](const std::string& what) { report.violations.push_back(what); };

  std::set<int> bus_ids;
  int slack_count = 0;
  for (std::size_t i = 0; i < grid.buses.size(); ++i) {
    const auto& bus = grid.buses[i];
    if (bus.id <= 0) violation(tag("buses", i, bus.id) + ": id must be positive");
    if (!bus_ids.insert(bus.id).second) violation(tag("buses", i, bus.id) + ": duplicate bus id");
    if (bus.is_slack) ++slack_count;
  }
  if (grid.buses.empty()) violation("case has no buses");
  if (slack_count != 1)
    violation("case must have exactly one slack bus, found " + std::to_string(slack_count));
  if (!(grid.base_mva > 0.0)) violation("base_mva must be positive");

  std::set<int> gen_ids;
  for (std::size_t i = 0; i < grid.generators.size(); ++i) {
    const auto& gen = grid.generators[i];
    const auto name = tag("generators", i, gen.id);
    if (gen.id <= 0) violation(name + ": id must be positive");
    if (!gen_ids.insert(gen.id).second) violation(name + ": duplicate generator id");
    if (!bus_ids.contains(gen.bus)) violation(name + ": bus " + std::to_string(gen.bus) + " does not exist");
    if (!(gen.p_min >= 0.0 && gen.p_min <= gen.p_max && std::isfinite(gen.p_max)))
      violation(name + ": requires 0 <= p_min <= p_max");
    if (!is_probability(gen.for_prob)) violation(name + ": forced outage rate outside [0,1)");
  }

  std::set<int> line_ids;
  for (std::size_t i = 0; i < grid.lines.size(); ++i) {
    const auto& line = grid.lines[i];
    const auto name = tag("lines", i, line.id);
    if (line.id <= 0) violation(name + ": id must be positive");
    if (!line_ids.insert(line.id).second) violation(name + ": duplicate line id");
    if (!bus_ids.contains(line.from_bus))
      violation(name + ": from bus " + std::to_string(line.from_bus) + " does not exist");
    if (!bus_ids.contains(line.to_bus))
      violation(name + ": to bus " + std::to_string(line.to_bus) + " does not exist");
    if (line.from_bus == line.to_bus) violation(name + ": from and to bus coincide");
    if (!(line.reactance > 0.0 && std::isfinite(line.reactance))) violation(name + ": reactance must be positive");
    if (!(line.rating > 0.0 && std::isfinite(line.rating))) violation(name + ": rating must be positive");
    if (!is_probability(line.for_prob)) violation(name + ": forced outage rate outside [0,1)");
  }

  std::set<int> load_buses;
  for (std::size_t i = 0; i < grid.loads.size(); ++i) {
    const auto& load = grid.loads[i];
    const auto name = tag("loads", i, load.bus);
    if (!bus_ids.contains(load.bus)) violation(name + ": bus " + std::to_string(load.bus) + " does not exist");
    if (!load_buses.insert(load.bus).second) violation(name + ": more than one load on bus");
    if (!(load.demand >= 0.0 && std::isfinite(load.demand))) violation(name + ": demand must be non-negative");
    if (!(load.weight > 0.0 && std::isfinite(load.weight))) violation(name + ": weight must be positive");
  }

  if (grid.total_demand_mw && std::abs(*grid.total_demand_mw - grid.total_demand()) > 1e-6) {
    std::ostringstream os;
    os << "sum of loads " << grid.total_demand() << " MW differs from declared total_demand_mw "
       << *grid.total_demand_mw;
    violation(os.str());
  }
  if (grid.total_capacity() < grid.total_demand()) {
    std::ostringstream os;
    os << "installed capacity " << grid.total_capacity() << " MW is below demand " << grid.total_demand()
       << " MW";
    report.warnings.push_back(os.str());
  }
  return report;
}

namespace {

void reject_unknown_keys(const json& object, std::initializer_list<std::string_view> allowed,
                         const std::string& where) {
  if (!object.is_object()) throw CaseError(where + ": expected an object");
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw CaseError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T field(const json& object, const char* key, const std::string& where) {
  auto it = object.find(key);
  if (it == object.end()) throw CaseError(where + ": missing key '" + key + "'");
  try {
    if constexpr (std::is_same_v<T, int>) {
      if (!it->is_number_integer()) throw CaseError(where + ": '" + key + "' must be an integer");
      return it->template get<int>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw CaseError(where + ": '" + key + "' must be a number");
      return it->template get<double>();
    } else {
      return it->template get<T>();
    }
  } catch (const json::exception& e) {
    throw CaseError(where + ": bad value for '" + key + "': " + e.what());
  }
}

const json& array_field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw CaseError(std::string("missing key '") + key + "'");
  if (!it->is_array()) throw CaseError(std::string("'") + key + "' must be an array");
  return *it;
}

std::string record_name(const char* kind, std::size_t pos) {
  return std::string(kind) + "[" + std::to_string(pos) + "]";
}

}  // namespace

GridCase parse_case(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw CaseError("syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  reject_unknown_keys(doc,
                      {"name", "provenance", "base_mva", "total_demand_mw", "buses", "generators", "lines", "loads"},
                      "case");

  GridCase grid;
  grid.name = field<std::string>(doc, "name", "case");
  if (doc.contains("provenance")) grid.provenance = field<std::string>(doc, "provenance", "case");
  if (doc.contains("base_mva")) grid.base_mva = field<double>(doc, "base_mva", "case");
  if (doc.contains("total_demand_mw")) grid.total_demand_mw = field<double>(doc, "total_demand_mw", "case");

  const auto& buses = array_field(doc, "buses");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const auto where = record_name("buses", i);
    reject_unknown_keys(buses[i], {"id", "slack"}, where);
    grid.buses.push_back({field<int>(buses[i], "id", where), field<bool>(buses[i], "slack", where)});
  }
  const auto& gens = array_field(doc, "generators");
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const auto where = record_name("generators", i);
    reject_unknown_keys(gens[i], {"id", "bus", "p_min", "p_max", "for"}, where);
    grid.generators.push_back({field<int>(gens[i], "id", where), field<int>(gens[i], "bus", where),
                               field<double>(gens[i], "p_min", where), field<double>(gens[i], "p_max", where),
                               field<double>(gens[i], "for", where)});
  }
  const auto& lines = array_field(doc, "lines");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto where = record_name("lines", i);
    reject_unknown_keys(lines[i], {"id", "from", "to", "x", "rating", "for"}, where);
    grid.lines.push_back({field<int>(lines[i], "id", where), field<int>(lines[i], "from", where),
                          field<int>(lines[i], "to", where), field<double>(lines[i], "x", where),
                          field<double>(lines[i], "rating", where), field<double>(lines[i], "for", where)});
  }
  const auto& loads = array_field(doc, "loads");
  for (std::size_t i = 0; i < loads.size(); ++i) {
    const auto where = record_name("loads", i);
    reject_unknown_keys(loads[i], {"bus", "mw", "weight"}, where);
    Load load{field<int>(loads[i], "bus", where), field<double>(loads[i], "mw", where), 1.0};
    if (loads[i].contains("weight")) load.weight = field<double>(loads[i], "weight", where);
    grid.loads.push_back(load);
  }

  auto report = validate_case(grid);
  if (!report.ok()) {
    std::string message = "invalid case '" + grid.name + "'";
    for (const auto& v : report.violations) message += "\n  " + v;
    throw CaseError(message);
  }
  return grid;
}

std::string serialize_case(const GridCase& grid) {
  json doc;
  doc["name"] = grid.name;
  if (!grid.provenance.empty()) doc["provenance"] = grid.provenance;
  doc["base_mva"] = grid.base_mva;
  if (grid.total_demand_mw) doc["total_demand_mw"] = *grid.total_demand_mw;
  doc["buses"] = json::array();
  for (const auto& b : grid.buses) doc["buses"].push_back({{"id", b.id}, {"slack", b.is_slack}});
  doc["generators"] = json::array();
  for (const auto& g : grid.generators)
    doc["generators"].push_back(
        {{"id", g.id}, {"bus", g.bus}, {"p_min", g.p_min}, {"p_max", g.p_max}, {"for", g.for_prob}});
  doc["lines"] = json::array();
  for (const auto& l : grid.lines)
    doc["lines"].push_back({{"id", l.id},
                            {"from", l.from_bus},
                            {"to", l.to_bus},
                            {"x", l.reactance},
                            {"rating", l.rating},
                            {"for", l.for_prob}});
  doc["loads"] = json::array();
  for (const auto& l : grid.loads) doc["loads"].push_back({{"bus", l.bus}, {"mw", l.demand}, {"weight", l.weight}});
  return doc.dump(2) + "\n";
}

std::vector<std::string> builtin_case_names() {
  std::vector<std::string> names;
  for (const auto& entry : detail::builtin_cases()) names.emplace_back(entry.name);
  return names;
}

std::string_view builtin_case_text(std::string_view name) {
  for (const auto& entry : detail::builtin_cases())
    if (entry.name == name) return entry.text;
  throw CaseError("unknown builtin case '" + std::string(name) + "'");
}

GridCase builtin_case(std::string_view name) { return parse_case(builtin_case_text(name)); }

GridCase load_case(const std::string& name_or_path) {
  for (const auto& entry : detail::builtin_cases())
    if (entry.name == name_or_path) return parse_case(entry.text);
  std::ifstream in(name_or_path, std::ios::binary);
  if (!in) throw CaseError("'" + name_or_path + "' is neither a builtin case nor a readable file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_case(buffer.str());
}

GridCase scale_loads(GridCase grid, double factor) {
  if (!(factor >= 0.0) || !std::isfinite(factor)) throw std::invalid_argument("load scale must be non-negative");
  if (factor == 1.0) return grid;
  for (auto& load : grid.loads) load.demand *= factor;
  if (grid.total_demand_mw) grid.total_demand_mw = grid.total_demand();
  return grid;
}

CaseFingerprint fingerprint(const GridCase& grid) {
  return {grid.name, detail::hex64(detail::fnv1a64(serialize_case(grid)))};
}

}  // namespace relbn
