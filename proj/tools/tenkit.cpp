#include "acceptance/acceptance.hpp"
#include "cli/cli.hpp"

int main(int argc, char** argv) {
  return tenkit::cli::run(argc, argv, [](std::ostream& log, nlohmann::json& report) {
    return tenkit::acceptance::run_selftest(log, report);
  });
}
