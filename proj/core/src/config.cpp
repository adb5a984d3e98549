#include "regrom/config.hpp"

#include <fstream>
#include <sstream>

namespace regrom {

uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw InputError("config: malformed section at line " +
                         std::to_string(lineno));
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw InputError("config: missing '=' at line " + std::to_string(lineno));
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw InputError("config: empty key at line " + std::to_string(lineno));
    cfg.kv_[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("config: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

std::string Config::canonical_text() const {
  std::string out;
  std::string section;
  for (const auto& [key, value] : kv_) {
    size_t dot = key.rfind('.');
    std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
    std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    if (sec != section) {
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += name + " = " + value + "\n";
  }
  return out;
}

void Config::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw InputError("config: cannot open " + path + " for writing");
  os << canonical_text();
}

std::string Config::get(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw InputError("config: missing key '" + key + "'");
  return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& dflt) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? dflt : it->second;
}

double Config::get_double(const std::string& key, double dflt) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  try {
    size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size())
      throw InputError("config: bad number for '" + key + "'");
    return v;
  } catch (const std::exception&) {
    throw InputError("config: bad number for '" + key + "'");
  }
}

int Config::get_int(const std::string& key, int dflt) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  try {
    size_t pos = 0;
    int v = std::stoi(it->second, &pos);
    if (pos != it->second.size())
      throw InputError("config: bad integer for '" + key + "'");
    return v;
  } catch (const std::exception&) {
    throw InputError("config: bad integer for '" + key + "'");
  }
}

uint64_t Config::get_u64(const std::string& key, uint64_t dflt) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw InputError("config: bad integer for '" + key + "'");
  }
}

bool Config::get_bool(const std::string& key, bool dflt) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InputError("config: bad boolean for '" + key + "'");
}

void Config::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

uint64_t Config::fingerprint() const {
  // worker counts do not affect results and are excluded from the hash
  std::string out;
  for (const auto& [key, value] : kv_) {
    if (key.size() >= 8 && key.compare(key.size() - 8, 8, ".workers") == 0)
      continue;
    out += key + "=" + value + "\n";
  }
  return fnv1a(out);
}

}  // namespace regrom
