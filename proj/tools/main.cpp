#include <exception>
#include <iostream>

#include "commands.hpp"
#include "taskpart/errors.hpp"

using namespace taskpart;

int main(int argc, char** argv) {
  CLI::App app{"Task partitioning toolkit: point-cloud features, balanced clustering and the "
               "generalist-specialist training loop on a synthetic task family"};
  app.require_subcommand(1);

  cli::register_extract(app);
  cli::register_partition(app);
  cli::register_pipeline(app);
  cli::register_report(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitRuntime;
  }
  return cli::kExitOk;
}
