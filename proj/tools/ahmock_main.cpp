// Scenario-driven chat-completions mock for exercising the inference client
// without a real model server. Serves until killed.

#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "ah/errors.hpp"
#include "ah/mock_server.hpp"

int main(int argc, char** argv) {
  CLI::App app{"scriptable chat-completions mock keyed by clip id"};

  std::string scenario_path;
  int port = 0;
  app.add_option("--scenario", scenario_path, "scenario JSON file")->required();
  app.add_option("--port", port, "fixed port (0 = pick a free one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    ah::MockModelServer server(ah::MockScenario::load_file(scenario_path));
    server.start(port);
    std::printf("listening on %s\n", server.base_url().c_str());
    std::fflush(stdout);
    server.wait();
  } catch (const ah::Error& e) {
    std::fprintf(stderr, "ahmock: %s\n", e.what());
    return 1;
  }
  return 0;
}
