#include "srtube/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "srtube/types.hpp"

namespace srtube {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-')) {
      return false;
    }
  }
  return k.find("..") == std::string::npos;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool to_double(const std::string& s, double& v) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  return ec == std::errc() && p == e;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    std::ostringstream where;
    where << origin << ":" << line << ": ";
    if (eq == std::string::npos) throw ConfigError(where.str() + "expected `key = value`");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(where.str() + "malformed key '" + key + "'");
    if (value.empty()) throw ConfigError(where.str() + key + ": empty value");
    if (c.entries_.count(key)) {
      std::ostringstream os;
      os << where.str() << key << ": duplicate key (first set on line " << c.entries_[key].line
         << ")";
      throw ConfigError(os.str());
    }
    c.entries_[key] = {value, line};
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void Config::fail(const std::string& key, const std::string& what) const {
  std::ostringstream os;
  os << origin_;
  auto it = entries_.find(key);
  if (it != entries_.end()) os << ":" << it->second.line;
  os << ": " << key << ": " << what;
  throw ConfigError(os.str());
}

std::string Config::str(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) fail(key, "required key is missing");
  return it->second.value;
}

std::string Config::str(const std::string& key, const std::string& fallback) const {
  return has(key) ? str(key) : fallback;
}

double Config::num(const std::string& key) const {
  const std::string v = str(key);
  double d;
  if (!to_double(v, d) || !std::isfinite(d)) fail(key, "expected a number, got '" + v + "'");
  return d;
}

double Config::num(const std::string& key, double fallback) const {
  return has(key) ? num(key) : fallback;
}

int Config::integer(const std::string& key) const {
  if (!has(key)) fail(key, "required key is missing");
  const long long v = large(key, 0);
  if (v < -2147483647LL || v > 2147483647LL) fail(key, "integer out of range");
  return static_cast<int>(v);
}

int Config::integer(const std::string& key, int fallback) const {
  return has(key) ? integer(key) : fallback;
}

long long Config::large(const std::string& key, long long fallback) const {
  if (!has(key)) return fallback;
  const std::string v = str(key);
  double d;
  if (!to_double(v, d) || d != std::floor(d) || std::abs(d) > 9e15) {
    fail(key, "expected an integer, got '" + v + "'");
  }
  return static_cast<long long>(d);
}

std::vector<double> Config::list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& w : split_list(str(key))) {
    double d;
    if (!to_double(w, d) || !std::isfinite(d)) fail(key, "expected numbers, got '" + w + "'");
    out.push_back(d);
  }
  return out;
}

std::vector<std::string> Config::words(const std::string& key) const {
  return split_list(str(key));
}

Config Config::section(const std::string& prefix) const {
  Config c;
  c.origin_ = origin_;
  const std::string p = prefix + ".";
  for (const auto& [k, e] : entries_) {
    if (k.compare(0, p.size(), p) == 0) c.entries_[k.substr(p.size())] = e;
  }
  return c;
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_) out.push_back(k);
  return out;
}

Config Config::overlaid(const Config& top) const {
  Config c = *this;
  for (const auto& [k, e] : top.entries_) c.entries_[k] = e;
  return c;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, e] : entries_) out += k + "=" + e.value + "\n";
  return out;
}

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace srtube
