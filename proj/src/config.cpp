#include "memrank/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "memrank/util.hpp"

namespace memrank {

using nlohmann::json;

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(row) + ": expected key = value");
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config: line " + std::to_string(row) + ": empty key");
    cfg.kv_[key] = value;
  }
  return cfg;
}

Config Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool Config::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string Config::get(const std::string& key, const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

uint64_t Config::get_u64(const std::string& key, uint64_t fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw std::runtime_error("config: key " + key + " is not an unsigned integer: " + it->second);
  }
}

int64_t Config::get_i64(const std::string& key, int64_t fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw std::runtime_error("config: key " + key + " is not an integer: " + it->second);
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw std::runtime_error("config: key " + key + " is not a number: " + it->second);
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const std::string v = to_lower(it->second);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error("config: key " + key + " is not a boolean: " + it->second);
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return {};
  std::vector<std::string> out;
  for (auto& part : split(it->second, ',')) {
    std::string v = trim(part);
    if (!v.empty()) out.push_back(std::move(v));
  }
  return out;
}

void Config::set(const std::string& key, const std::string& value) { kv_[key] = value; }

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : kv_) out += k + "=" + v + "\n";
  return out;
}

uint64_t Config::digest() const { return fnv1a(canonical()); }

void RunManifest::write(const std::string& path) const {
  json j{{"command", command},
         {"seed", seed},
         {"profile", profile},
         {"ablation",
          {{"without_cf", ablation.without_cf},
           {"without_meta", ablation.without_meta},
           {"without_re", ablation.without_re}}},
         {"config_digest", fnv_hex(config_digest)},
         {"inputs", input_digests},
         {"outputs", output_digests},
         {"created_unix", created_unix}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

RunManifest RunManifest::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  json j = json::parse(in);
  RunManifest m;
  m.command = j.value("command", "");
  m.seed = j.value("seed", uint64_t{0});
  m.profile = j.value("profile", "");
  m.ablation.without_cf = j.at("ablation").value("without_cf", false);
  m.ablation.without_meta = j.at("ablation").value("without_meta", false);
  m.ablation.without_re = j.at("ablation").value("without_re", false);
  m.config_digest = std::stoull(j.value("config_digest", "0"), nullptr, 16);
  if (j.contains("inputs"))
    m.input_digests = j.at("inputs").get<std::map<std::string, std::string>>();
  if (j.contains("outputs"))
    m.output_digests = j.at("outputs").get<std::map<std::string, std::string>>();
  m.created_unix = j.value("created_unix", int64_t{0});
  return m;
}

}  // namespace memrank
