#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace srtube {

// Flat `key = value` configuration with dotted keys and `#` comments.
// Errors are ConfigError messages carrying the line number of the key.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<config>");
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::string str(const std::string& key) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  double num(const std::string& key) const;
  double num(const std::string& key, double fallback) const;
  int integer(const std::string& key) const;
  int integer(const std::string& key, int fallback) const;
  long long large(const std::string& key, long long fallback) const;
  std::vector<double> list(const std::string& key) const;
  std::vector<std::string> words(const std::string& key) const;

  // Keys below `prefix.`, with the prefix removed.
  Config section(const std::string& prefix) const;
  std::vector<std::string> keys() const;
  // This configuration with the entries of `top` added or replaced.
  Config overlaid(const Config& top) const;

  // Throws ConfigError naming the first key rejected by `known`.
  template <class Pred>
  void require_known(Pred known) const {
    for (const auto& [k, e] : entries_) {
      if (!known(k)) fail(k, "unknown key");
    }
  }

  // Sorted `key=value` lines; the basis of the output hash.
  std::string canonical() const;
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

 private:
  struct Entry {
    std::string value;
    int line;
  };
  std::string origin_;
  std::map<std::string, Entry> entries_;
};

std::uint64_t fnv1a(const std::string& data);

}  // namespace srtube
