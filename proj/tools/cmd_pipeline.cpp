#include <iostream>
#include <memory>

#include "commands.hpp"
#include "taskpart/errors.hpp"
#include "taskpart/evalrep.hpp"
#include "taskpart/parallel.hpp"
#include "taskpart/pipeline.hpp"
#include "taskpart/text.hpp"

namespace taskpart::cli {

namespace {

struct PipelineOptions {
  std::string config;
  std::string method = "balanced";
  std::string out;
};

cluster::Method method_from_flag(const std::string& name) {
  if (name == "balanced") return cluster::Method::balanced_greedy;
  if (name == "vanilla") return cluster::Method::kmeans_vanilla;
  if (name == "random") return cluster::Method::random;
  throw ValidationError("unknown method '" + name + "'");
}

void run_pipeline_command(const PipelineOptions& opts) {
  const auto config = gslsim::run_config_from_json(read_text_file(opts.config));
  const auto result =
      gslsim::run_gsl_pipeline(config, method_from_flag(opts.method), workers_from_env());
  evalrep::persist_run(result, opts.out);

  evalrep::EvalStats phase1_selected;
  phase1_selected.average = result.phase1_selected_avg;
  evalrep::EvalStats phase3_selected;
  phase3_selected.average = result.phase3_selected_avg;
  const auto table = evalrep::comparison_table({
      {"Generalist (Phase 1)", std::nullopt, phase1_selected},
      {"Specialists (" + cluster::method_name(result.method) + ")", result.config.n_specialists,
       result.specialist_phase},
      {"Generalist (Phase 3)", std::nullopt, phase3_selected},
  });
  std::cout << "Run complete: " << result.variations.size() << " variations, "
            << result.selected.size() << " selected low performers.\n";
  std::cout << "Success on the selected set:\n" << table.markdown;
  std::cout << "Demonstrations: " << result.demos_collected << "/" << result.demos_requested
            << " collected (shortfall " << result.demo_shortfall << ").\n";
  std::cout << "Artifacts written to " << opts.out << "\n";
}

void register_run_command(CLI::App& app, const char* name, const char* help) {
  auto opts = std::make_shared<PipelineOptions>();
  CLI::App* cmd = app.add_subcommand(name, help);
  cmd->add_option("--config", opts->config, "Run configuration JSON")->required();
  cmd->add_option("--method", opts->method, "balanced, vanilla or random")
      ->check(CLI::IsMember({"balanced", "vanilla", "random"}));
  cmd->add_option("--out", opts->out, "Run directory to create")->required();
  cmd->callback([opts] { run_pipeline_command(*opts); });
}

}  // namespace

void register_pipeline(CLI::App& app) {
  register_run_command(app, "pipeline",
                       "Run the full generalist-specialist loop and persist every artifact");
  register_run_command(app, "simulate", "Alias for pipeline");
}

}  // namespace taskpart::cli
