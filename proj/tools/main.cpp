#include <CLI11.hpp>
#include <string>

#include "fibra/driver.hpp"
#include "fibra/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fibra: two-scale fiber-network finite element solver"};
  app.require_subcommand(1);

  struct Common {
    std::string config;
    int workers = -1;
    long long seed = -1;
    std::string out;
    std::string kernels;
  };
  std::map<std::string, Common> opts;
  for (const char* name : {"rve", "multiscale", "bench", "netgen", "metrics"}) {
    CLI::App* sub = app.add_subcommand(name);
    Common& c = opts[name];
    sub->add_option("--config", c.config, "config file")->required();
    sub->add_option("--workers", c.workers, "override [run] workers");
    sub->add_option("--seed", c.seed, "override [run] seed");
    sub->add_option("--out", c.out, "override [run] out");
    sub->add_option("--kernels", c.kernels, "auto|scalar|avx2");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();
  const Common& c = opts[sub];

  fibra::RunConfig cfg;
  try {
    cfg = fibra::RunConfig::from_file(c.config);
    cfg.mode = fibra::parse_mode(sub);
    if (c.workers > 0) cfg.workers = c.workers;
    if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
    if (!c.out.empty()) cfg.out = c.out;
    if (!c.kernels.empty()) {
      cfg.isa_request = c.kernels;
      cfg.isa = fibra::kernels::parse_isa(c.kernels);
    }
  } catch (const fibra::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return fibra::kExitIo;
  } catch (const fibra::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return fibra::kExitConfig;
  }
  return fibra::run(cfg);
}
