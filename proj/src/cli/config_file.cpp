#include "tonopah/cli/config_file.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tonopah/sim/fraction.hpp"

namespace tonopah::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::int64_t scaled(const std::string& what, const std::string& text, std::int64_t scale) {
  const auto f = sim::parse_fraction(text);
  if (!f || f->num < 0) throw ConfigError("bad " + what + " value '" + text + "'");
  const auto v = static_cast<__int128>(f->num) * scale;
  if (v % f->den != 0) throw ConfigError(what + " value '" + text + "' is too fine");
  return static_cast<std::int64_t>(v / f->den);
}

/// Expands "a,b,lo..hi/step" into integers in units of 1/scale.
std::vector<std::int64_t> parse_axis(const std::string& what, const std::string& text,
                                     std::int64_t scale) {
  std::vector<std::int64_t> out;
  for (const auto& item : split(text, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(scaled(what, item, scale));
      continue;
    }
    const auto slash = item.find('/', dots);
    if (slash == std::string::npos)
      throw ConfigError("range '" + item + "' needs a step: lo..hi/step");
    const auto lo = scaled(what, trim(item.substr(0, dots)), scale);
    const auto hi = scaled(what, trim(item.substr(dots + 2, slash - dots - 2)), scale);
    const auto step = scaled(what, trim(item.substr(slash + 1)), scale);
    if (step <= 0) throw ConfigError("range '" + item + "' has a non-positive step");
    if (hi < lo) throw ConfigError("range '" + item + "' is empty");
    for (auto v = lo; v <= hi; v += step) out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty " + what + " axis");
  for (auto v : out)
    if (v <= 0) throw ConfigError(what + " axis values must be positive");
  return out;
}

std::string format_scaled(std::int64_t v, std::int64_t scale) {
  std::string out = std::to_string(v / scale);
  auto frac = v % scale;
  if (frac == 0) return out;
  std::string digits;
  for (auto s = scale / 10; s > 0; s /= 10) {
    digits += static_cast<char>('0' + frac / s);
    frac %= s;
  }
  while (digits.back() == '0') digits.pop_back();
  return out + "." + digits;
}

std::string json_scalar_text(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return v.dump();
  throw ConfigError("config key '" + key + "' must be a scalar");
}

constexpr std::int64_t kNsPerMs = 1'000'000;
constexpr std::int64_t kBpsPerMbps = 1'000'000;

}  // namespace

KeyValues parse_config_text(const std::string& text) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues parse_config_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON config: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("JSON config must be an object");
  const auto& obj = doc.contains("config") ? doc.at("config") : doc;
  if (!obj.is_object()) throw ConfigError("\"config\" must be an object");
  KeyValues kv;
  for (const auto& [k, v] : obj.items()) kv[k] = json_scalar_text(v, k);
  return kv;
}

KeyValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const auto text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_config_json(text);
  return parse_config_text(text);
}

std::vector<sim::SimTime> parse_delay_axis(const std::string& text) {
  std::vector<sim::SimTime> out;
  for (auto v : parse_axis("delay", text, kNsPerMs)) out.emplace_back(v);
  return out;
}

std::vector<sim::BitRate> parse_rate_axis(const std::string& text) {
  std::vector<sim::BitRate> out;
  for (auto v : parse_axis("rate", text, kBpsPerMbps))
    out.push_back(sim::BitRate{static_cast<std::uint64_t>(v)});
  return out;
}

std::string format_delay_axis(const std::vector<sim::SimTime>& axis) {
  std::string out;
  for (const auto& d : axis) {
    if (!out.empty()) out += ',';
    out += format_scaled(d.count(), kNsPerMs);
  }
  return out;
}

std::string format_rate_axis(const std::vector<sim::BitRate>& axis) {
  std::string out;
  for (const auto& r : axis) {
    if (!out.empty()) out += ',';
    out += format_scaled(static_cast<std::int64_t>(r.bits_per_second), kBpsPerMbps);
  }
  return out;
}

std::vector<qdisc::QdiscKind> parse_qdisc_list(const std::string& text) {
  std::vector<qdisc::QdiscKind> out;
  for (const auto& name : split(text, ',')) {
    const auto k = qdisc::parse_qdisc_kind(name);
    if (!k) throw ConfigError("unknown qdisc '" + name + "' (pfifo, fq, fq_codel)");
    out.push_back(*k);
  }
  if (out.empty()) throw ConfigError("empty qdisc list");
  return out;
}

std::string format_qdisc_list(const std::vector<qdisc::QdiscKind>& kinds) {
  std::string out;
  for (auto k : kinds) {
    if (!out.empty()) out += ',';
    out += qdisc::to_string(k);
  }
  return out;
}

GridSettings default_grid_settings() {
  GridSettings g;
  g.delays = parse_delay_axis("10,50,100");
  g.rates = parse_rate_axis("10,50,100");
  return g;
}

void apply_grid_keys(const KeyValues& kv, GridSettings& g) {
  KeyValues scenario;
  for (const auto& [k, v] : kv) {
    if (k == "qdisc") {
      g.qdiscs = parse_qdisc_list(v);
    } else if (k == "delays_ms") {
      g.delays = parse_delay_axis(v);
    } else if (k == "rates_mbps") {
      g.rates = parse_rate_axis(v);
    } else if (k == "reps") {
      const auto n = scaled("reps", v, 1);
      if (n < 1) throw ConfigError("reps must be at least 1");
      g.reps = static_cast<std::uint32_t>(n);
    } else if (k == "workers") {
      g.workers = static_cast<unsigned>(scaled("workers", v, 1));
    } else if (k == "compare_cc") {
      if (v == "true" || v == "1") g.compare_cc = true;
      else if (v == "false" || v == "0") g.compare_cc = false;
      else throw ConfigError("bad boolean for compare_cc: '" + v + "'");
    } else {
      scenario[k] = v;
    }
  }
  try {
    g.base = harness::from_key_values(scenario, g.base);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  g.base.qdisc_kind = g.qdiscs.front();
}

KeyValues to_key_values(const GridSettings& g) {
  auto kv = harness::to_key_values(g.base);
  kv.erase("delay_ms");
  kv.erase("rate_mbps");
  kv["qdisc"] = format_qdisc_list(g.qdiscs);
  kv["delays_ms"] = format_delay_axis(g.delays);
  kv["rates_mbps"] = format_rate_axis(g.rates);
  kv["reps"] = std::to_string(g.reps);
  kv["workers"] = std::to_string(g.workers);
  kv["compare_cc"] = g.compare_cc ? "true" : "false";
  return kv;
}

}  // namespace tonopah::cli
