// Reverse proxy daemon: tags incoming API requests, evaluates policies and
// forwards or denies. See README for configuration details.

#include <atomic>
#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "apitag/config.hpp"
#include "apitag/proxy.hpp"

namespace {
std::atomic<bool> g_stop{false};
void handle_signal(int) { g_stop = true; }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"apitagd - tagging reverse proxy with policy enforcement"};

  std::string config_path;
  std::string listen;
  std::string upstream;
  std::string mode;
  std::string tagger;
  std::string preload;
  std::string log_path;

  app.add_option("-c,--config", config_path, "JSON config file");
  app.add_option("-l,--listen", listen, "listen address host:port");
  app.add_option("-u,--upstream", upstream, "upstream address host:port");
  app.add_option("-m,--mode", mode, "prompting mode: single|parallel");
  app.add_option("-t,--tagger", tagger, "tagger: llm|oracle|transcript");
  app.add_option("--preload", preload, "cache preload fixture (JSON lines)");
  app.add_option("--log", log_path, "out-of-band request log file");

  CLI11_PARSE(app, argc, argv);

  try {
    apitag::AppConfig cfg =
        config_path.empty() ? apitag::AppConfig{} : apitag::load_config(config_path);
    if (!listen.empty()) cfg.listen_address = listen;
    if (!upstream.empty()) cfg.upstream_address = upstream;
    if (!mode.empty()) cfg.mode = apitag::mode_from_string(mode);
    if (!tagger.empty()) cfg.tagger = apitag::tagger_from_string(tagger);
    if (!preload.empty()) cfg.preload_path = preload;
    if (!log_path.empty()) cfg.log_path = log_path;

    if (cfg.upstream_address.empty()) {
      std::cerr << "error: no upstream address configured\n";
      return 2;
    }
    cfg.validate();

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);

    std::cout << "apitagd listening on " << cfg.listen_address << ", upstream "
              << cfg.upstream_address << "\n";
    apitag::serve(cfg, g_stop);
    std::cout << "apitagd stopped\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
