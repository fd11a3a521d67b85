#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "srtube/srtube.h"

namespace {

struct Flags {
  std::string config;
  std::string out;
  long long seed = -1;
  int threads = 0;
  double quad_scale = 1.0;
};

int exit_code(srt_status s) {
  switch (s) {
    case SRT_OK: return 0;
    case SRT_ERR_CONFIG:
    case SRT_ERR_INVALID: return 2;
    case SRT_ERR_NUMERICAL: return 3;
    case SRT_ERR_INVARIANT: return 4;
    default: return 1;
  }
}

int run(const std::string& sub, const Flags& f) {
  srt_scene* scene = nullptr;
  srt_status st = srt_scene_load(f.config.c_str(), &scene);
  if (st != SRT_OK) {
    std::cerr << "srtube: " << srt_last_error() << "\n";
    return exit_code(st);
  }
  std::string out = f.out;
  if (out.empty()) {
    char* p = nullptr;
    if (srt_scene_output(scene, &p) == SRT_OK) out = p;
    srt_string_free(p);
  }
  srt_run_options opt;
  srt_run_options_defaults(&opt);
  opt.has_seed = f.seed >= 0;
  opt.seed = f.seed >= 0 ? static_cast<unsigned long long>(f.seed) : 0;
  opt.threads = f.threads;
  opt.quad_scale = f.quad_scale;

  char* csv = nullptr;
  char* summary = nullptr;
  st = srt_scene_run(scene, sub.c_str(), &opt, &csv, &summary);
  srt_scene_free(scene);
  if (st != SRT_OK && st != SRT_ERR_INVARIANT) {
    std::cerr << "srtube " << sub << ": " << srt_last_error() << "\n";
    return exit_code(st);
  }
  int code = exit_code(st);
  if (out.empty() || out == "-") {
    std::cout << csv;
  } else {
    std::ofstream os(out, std::ios::binary);
    os << csv;
    if (!os) {
      std::cerr << "srtube: cannot write '" << out << "'\n";
      code = 1;
    } else {
      std::cout << summary;
    }
  }
  srt_string_free(csv);
  srt_string_free(summary);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tube volumes and invariants around submanifolds of sub-Riemannian manifolds"};
  app.set_version_flag("--version", std::string(srt_version()));
  app.require_subcommand(1);

  const std::map<std::string, std::string> subs = {
      {"tube-volume", "tube volume V(r) over the radius grid"},
      {"weyl", "Weyl coefficients with parity diagnostics"},
      {"steiner", "half-tube (Steiner) coefficients of a co-oriented hypersurface"},
      {"hotelling", "volume comparison of two curves with equal Reeb angle"},
      {"invariants", "pass/fail suites with residuals"},
      {"oracle", "Monte-Carlo cross-check of the quadrature volumes"},
  };
  Flags flags;
  std::string chosen;
  for (const auto& [name, help] : subs) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("--config", flags.config, "scene configuration file")->required();
    s->add_option("--out", flags.out, "output file (default: config `output`, else stdout)");
    s->add_option("--seed", flags.seed, "random seed (overrides config `seed`)")
        ->check(CLI::NonNegativeNumber);
    s->add_option("--threads", flags.threads, "worker threads, 0 = all cores")
        ->check(CLI::NonNegativeNumber);
    s->add_option("--quad-scale", flags.quad_scale, "multiplies all quadrature node counts")
        ->check(CLI::PositiveNumber);
    s->callback([&chosen, name = name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return run(chosen, flags);
}
