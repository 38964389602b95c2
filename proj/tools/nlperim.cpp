#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nlperim/config.hpp"
#include "nlperim/error.hpp"
#include "nlperim/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal perimeter toolkit: kernels, perimeters, profiles, minimizers, certificates"};
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string formats;
  app.add_option("--config", config_path, "configuration file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the config)");
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides the config)");
  auto* fmt_opt = app.add_option("--format", formats, "comma-separated subset of json,csv,nlpg1");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nlperim::kExitConfig;
  }

  try {
    nlperim::RunConfig cfg = nlperim::load_config(config_path);
    if (*seed_opt) {
      cfg.seed = seed;
      if (cfg.solver) cfg.solver->seed = seed;
    }
    if (*out_opt) cfg.output = out_dir;
    if (*fmt_opt) cfg.formats = nlperim::parse_formats(formats);
    return nlperim::run(cfg, std::cout);
  } catch (const nlperim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return nlperim::kExitConfig;
  } catch (const nlperim::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return nlperim::kExitNumerical;
  } catch (const nlperim::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nlperim::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nlperim::kExitNumerical;
  }
}
