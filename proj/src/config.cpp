#include "cml/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cml/error.hpp"
#include "cml/io.hpp"

namespace cml {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

double to_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("not a non-negative integer: '" + s + "'");
  return v;
}

std::vector<double> double_list(const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split(value, ',')) {
    if (item.empty()) throw ConfigError("empty list element");
    auto r = split(item, ':');
    if (r.size() == 1) {
      out.push_back(to_double(r[0]));
    } else if (r.size() == 3) {
      const double lo = to_double(r[0]);
      const double hi = to_double(r[1]);
      const double st = to_double(r[2]);
      if (!(st > 0.0) || hi < lo) throw ConfigError("bad range '" + item + "'");
      const auto count = static_cast<std::size_t>(std::floor((hi - lo) / st + 1e-9)) + 1;
      for (std::size_t i = 0; i < count; ++i)
        out.push_back(std::round((lo + static_cast<double>(i) * st) * 1e12) / 1e12);
    } else {
      throw ConfigError("range '" + item + "' must be lo:hi:step");
    }
  }
  return out;
}

std::vector<std::size_t> size_list(const std::string& value) {
  std::vector<std::size_t> out;
  for (const auto& item : split(value, ',')) {
    if (item.empty()) throw ConfigError("empty list element");
    auto r = split(item, ':');
    if (r.size() == 1) {
      out.push_back(to_u64(r[0]));
    } else if (r.size() == 2 || r.size() == 3) {
      const auto lo = to_u64(r[0]);
      const auto hi = to_u64(r[1]);
      const auto st = r.size() == 3 ? to_u64(r[2]) : 1;
      if (st == 0 || hi < lo) throw ConfigError("bad range '" + item + "'");
      for (auto v = lo; v <= hi; v += st) out.push_back(v);
    } else {
      throw ConfigError("bad range '" + item + "'");
    }
  }
  return out;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("not a boolean: '" + s + "'");
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += format_double(v[i]);
    else
      out += std::to_string(v[i]);
  }
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field scalar(T ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, bool>)
              c.*member = to_bool(v);
            else if constexpr (std::is_same_v<T, std::string>)
              c.*member = v;
            else if constexpr (std::is_floating_point_v<T>)
              c.*member = to_double(v);
            else if constexpr (std::is_signed_v<T>)
              c.*member = static_cast<T>(std::llround(to_double(v)));
            else
              c.*member = static_cast<T>(to_u64(v));
          },
          [member](const ExperimentConfig& c) -> std::string {
            if constexpr (std::is_same_v<T, bool>)
              return c.*member ? "true" : "false";
            else if constexpr (std::is_same_v<T, std::string>)
              return c.*member;
            else if constexpr (std::is_floating_point_v<T>)
              return format_double(c.*member);
            else
              return std::to_string(c.*member);
          }};
}

template <typename T>
Field list(std::vector<T> ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) {
            if constexpr (std::is_floating_point_v<T>)
              c.*member = double_list(v);
            else
              c.*member = size_list(v);
          },
          [member](const ExperimentConfig& c) { return join(c.*member); }};
}

// Ordered as written by to_text.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table{
      {"map.slope", scalar(&ExperimentConfig::map_slope)},
      {"map.offset", scalar(&ExperimentConfig::map_offset)},
      {"n", list(&ExperimentConfig::n)},
      {"gamma", list(&ExperimentConfig::gamma)},
      {"length", scalar(&ExperimentConfig::length)},
      {"burn_in", scalar(&ExperimentConfig::burn_in)},
      {"quantile", scalar(&ExperimentConfig::quantile)},
      {"noise", list(&ExperimentConfig::noise)},
      {"observable", scalar(&ExperimentConfig::observable)},
      {"target", scalar(&ExperimentConfig::target)},
      {"block", scalar(&ExperimentConfig::block)},
      {"realizations", scalar(&ExperimentConfig::realizations)},
      {"seed", scalar(&ExperimentConfig::seed)},
      {"out", scalar(&ExperimentConfig::out)},
      {"threads", scalar(&ExperimentConfig::threads)},
      {"accuracy", scalar(&ExperimentConfig::accuracy)},
      {"k_max", scalar(&ExperimentConfig::k_max)},
      {"k_sum", scalar(&ExperimentConfig::k_sum)},
      {"t", list(&ExperimentConfig::t)},
      {"ensemble", scalar(&ExperimentConfig::ensemble)},
      {"calibration", scalar(&ExperimentConfig::calibration)},
      {"gev_block", scalar(&ExperimentConfig::gev_block)},
      {"min_exceedances", scalar(&ExperimentConfig::min_exceedances)},
      {"bins", scalar(&ExperimentConfig::bins)},
      {"density_realizations", scalar(&ExperimentConfig::density_realizations)},
      {"density_iterations", scalar(&ExperimentConfig::density_iterations)},
      {"band", scalar(&ExperimentConfig::band)},
      {"ulam_k", scalar(&ExperimentConfig::ulam_k)},
      {"samples_per_axis", scalar(&ExperimentConfig::samples_per_axis)},
      {"nu", list(&ExperimentConfig::nu)},
      {"excerpt", scalar(&ExperimentConfig::excerpt)},
      {"full_scale", scalar(&ExperimentConfig::full_scale)},
  };
  return table;
}

}  // namespace

ObservableSpec ExperimentConfig::observable_spec(std::size_t lattice_size) const {
  if (observable == "global") return GlobalSync{};
  if (observable == "local") return LocalSync{Boundary::chain};
  if (observable == "local_ring") return LocalSync{Boundary::ring};
  if (observable == "localization") return Localization{LatticeState::diagonal(lattice_size, target)};
  if (observable == "block") {
    std::vector<IndexBlock> blocks;
    for (std::size_t first = 0; first + block <= lattice_size; first += block)
      blocks.push_back({first, first + block - 1});
    if (blocks.empty()) throw ConfigError("block observable: lattice smaller than one block");
    return BlockSync{BlockSet(std::move(blocks), lattice_size)};
  }
  throw ConfigError("unknown observable '" + observable + "'");
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> warnings;
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (c.map_slope < 2) fail("map.slope must be an integer >= 2");
  if (!(c.map_offset >= 0.0 && c.map_offset < 1.0)) fail("map.offset must lie in [0, 1)");
  if (c.n.empty()) fail("n: empty range");
  for (auto n : c.n)
    if (n < 2) fail("n: lattice size must be >= 2");
  if (c.gamma.empty()) fail("gamma: empty range");
  for (double g : c.gamma) {
    if (!(g >= 0.0 && g < 1.0)) fail("gamma: values must lie in [0, 1)");
    if (g > 2.0 / 3.0)
      warnings.push_back("gamma = " + format_double(g) + " exceeds 2/3; theory values are undefined there");
  }
  if (c.noise.empty()) fail("noise: empty list");
  for (double e : c.noise)
    if (!(e >= 0.0)) fail("noise: intensities must be >= 0");
  if (c.length == 0) fail("length must be > 0");
  if (!(c.quantile > 0.0 && c.quantile < 1.0)) fail("quantile must lie in (0, 1)");
  if (c.realizations == 0) fail("realizations must be > 0");
  if (c.threads == 0) fail("threads must be > 0");
  if (!(c.accuracy > 0.0 && c.accuracy < 1.0)) fail("accuracy must lie in (0, 1)");
  if (c.k_sum > c.k_max) fail("k_sum must not exceed k_max");
  if (c.t.empty()) fail("t: empty list");
  for (double t : c.t)
    if (!(t > 0.0)) fail("t: values must be > 0");
  if (c.gev_block < 2) fail("gev_block must be >= 2");
  if (c.bins == 0) fail("bins must be > 0");
  if (!(c.band > 0.0)) fail("band must be > 0");
  if (c.nu.empty()) fail("nu: empty ladder");
  for (double v : c.nu)
    if (!(v > 0.0 && v < 1.0)) fail("nu: values must lie in (0, 1)");
  if (c.block < 2) fail("block must be >= 2");
  static const char* kinds[] = {"global", "local", "local_ring", "localization", "block"};
  if (std::find(std::begin(kinds), std::end(kinds), c.observable) == std::end(kinds))
    fail("unknown observable '" + c.observable + "'");
  if (!(c.target >= 0.0 && c.target < 1.0)) fail("target must lie in [0, 1)");
  if (c.full_scale) warnings.push_back("full_scale is set: runs use the original sample sizes and may take hours");
  return warnings;
}

ExperimentConfig parse_config(const std::string& text, std::vector<std::string>* warnings) {
  std::map<std::string, const Field*> index;
  for (const auto& [key, field] : fields()) index[key] = &field;

  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = index.find(key);
    if (it == index.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    try {
      it->second->set(c, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + " (" + key + "): " + e.what());
    }
  }
  auto w = validate(c);
  if (warnings) warnings->insert(warnings->end(), w.begin(), w.end());
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
      throw ConfigError("manifest " + path.string() + ": " + e.what());
    }
    if (!j.contains("config") || !j["config"].is_string())
      throw ConfigError("manifest " + path.string() + " has no embedded config");
    text = j["config"].get<std::string>();
  }
  return parse_config(text, warnings);
}

std::string to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(config) + "\n";
  return out;
}

}  // namespace cml
