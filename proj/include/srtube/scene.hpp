#pragma once

#include <optional>
#include <string>
#include <vector>

#include "srtube/config.hpp"
#include "srtube/tube_engine.hpp"

namespace srtube {

inline constexpr const char* kVersion = "0.1.0";

struct RunOptions {
  std::optional<unsigned long long> seed;  // overrides `seed` from the config
  int threads = 0;
  double quad_scale = 1.0;
};

struct RunResult {
  std::string csv;      // header, rows, `#` summary lines, provenance trailer
  std::string summary;  // the summary lines without `#`
  bool passed = true;   // false when a configured check or invariant failed
};

// Structure and patch described by the keys of one scene block
// (structure.*, patch.*, ode.*, quad.*, frame.grid).
SRStructure build_structure(const Config& block);
EmbeddedPatch build_patch(const Config& block, const SRStructure& s);
TubeSpec build_tube_spec(const Config& block, const RunOptions& opt = {});

class Scene {
 public:
  explicit Scene(Config cfg);

  static const std::vector<std::string>& subcommands();

  const Config& config() const { return cfg_; }
  // Output path from the config, empty when absent.
  std::string output() const { return cfg_.str("output", ""); }

  RunResult run(const std::string& subcommand, const RunOptions& opt = {}) const;

 private:
  Config cfg_;
};

}  // namespace srtube
