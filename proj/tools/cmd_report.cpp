#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "taskpart/cluster.hpp"
#include "taskpart/errors.hpp"
#include "taskpart/evalrep.hpp"
#include "taskpart/gslsim.hpp"
#include "taskpart/text.hpp"

namespace fs = std::filesystem;

namespace taskpart::cli {

namespace {

struct RunSummary {
  std::string name;
  std::string method;
  std::size_t n_specialists = 0;
  double phase1_selected = 0.0;
  double specialist_phase = 0.0;
  double phase3_selected = 0.0;
  std::vector<std::size_t> sizes;
  std::vector<std::pair<std::size_t, double>> per_specialist;  // (members, average)
};

RunSummary load_run(const fs::path& dir) {
  const auto mismatched = evalrep::verify_manifest(dir);
  if (!mismatched.empty()) {
    throw ValidationError("run directory '" + dir.string() + "' failed digest verification: " +
                          mismatched.front());
  }

  RunSummary summary;
  summary.name = dir.filename().string();
  if (summary.name.empty()) summary.name = dir.string();

  const auto config = gslsim::run_config_from_json(read_text_file(dir / "config.json"));
  summary.n_specialists = config.n_specialists;

  const auto partition = cluster::partition_from_json(read_text_file(dir / "partition.json"));
  summary.method = cluster::method_name(partition.method);
  summary.sizes = partition.sorted_sizes();

  const auto phase1 = evalrep::rates_from_csv(read_text_file(dir / "phase1_rates.csv"));
  const auto final_rates = evalrep::rates_from_csv(read_text_file(dir / "final_rates.csv"));

  std::vector<std::string> selected;
  for (const auto& members : partition.clusters) {
    selected.insert(selected.end(), members.begin(), members.end());
  }
  double p1 = 0.0, p3 = 0.0;
  for (const auto& id : selected) {
    p1 += phase1.at(id);
    p3 += final_rates.at(id);
  }
  summary.phase1_selected = selected.empty() ? 0.0 : p1 / static_cast<double>(selected.size());
  summary.phase3_selected = selected.empty() ? 0.0 : p3 / static_cast<double>(selected.size());

  // specialist_rates.csv: specialist,variation_id,rate
  const std::string text = read_text_file(dir / "specialist_rates.csv");
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (trim(line) != "specialist,variation_id,rate") {
    throw ValidationError("unexpected specialist_rates.csv header in '" + dir.string() + "'");
  }
  std::map<std::size_t, std::pair<std::size_t, double>> by_specialist;
  double total = 0.0;
  std::size_t count = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    if (fields.size() != 3) throw MalformedRecord(line_no, "expected specialist,variation_id,rate");
    const auto spec = parse_double(fields[0]);
    const auto rate = parse_double(fields[2]);
    if (!spec || !rate) throw MalformedRecord(line_no, "bad number");
    auto& entry = by_specialist[static_cast<std::size_t>(*spec)];
    entry.first += 1;
    entry.second += *rate;
    total += *rate;
    ++count;
  }
  summary.specialist_phase = count == 0 ? 0.0 : total / static_cast<double>(count);
  for (const auto& [spec, entry] : by_specialist) {
    summary.per_specialist.emplace_back(entry.first, entry.second / entry.first);
  }
  return summary;
}

std::string percent(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", rate * 100.0);
  return buf;
}

std::string render(const std::vector<RunSummary>& runs) {
  std::ostringstream md;
  md << "# Comparison report\n\n";

  md << "## Success on each run's selected variations\n\n";
  md << "| Run | Method | Specialists | Phase 1 | Specialist phase | Phase 3 |\n";
  md << "| --- | --- | --- | --- | --- | --- |\n";
  for (const auto& run : runs) {
    md << "| " << run.name << " | " << run.method << " | " << run.n_specialists << " | "
       << percent(run.phase1_selected) << " | " << percent(run.specialist_phase) << " | "
       << percent(run.phase3_selected) << " |\n";
  }
  md << "\n## Cluster sizes\n\n";
  md << "| Run | Method | Sorted sizes |\n";
  md << "| --- | --- | --- |\n";
  for (const auto& run : runs) {
    md << "| " << run.name << " | " << run.method << " |";
    for (std::size_t s : run.sizes) md << ' ' << s;
    md << " |\n";
  }
  md << "\n## Per-specialist averages\n\n";
  md << "| Run | Specialist | Variations | Average |\n";
  md << "| --- | --- | --- | --- |\n";
  for (const auto& run : runs) {
    for (std::size_t i = 0; i < run.per_specialist.size(); ++i) {
      md << "| " << run.name << " | " << i << " | " << run.per_specialist[i].first << " | "
         << percent(run.per_specialist[i].second) << " |\n";
    }
  }
  return md.str();
}

}  // namespace

void register_report(CLI::App& app) {
  auto run_dir = std::make_shared<std::string>();
  auto compare = std::make_shared<std::vector<std::string>>();
  auto out = std::make_shared<std::string>();
  CLI::App* cmd = app.add_subcommand(
      "report", "Verify run directories and emit a combined Markdown comparison");
  cmd->add_option("--run", *run_dir, "Primary run directory")->required();
  cmd->add_option("--compare", *compare, "Additional run directories to juxtapose");
  cmd->add_option("--out", *out, "Write the report here instead of standard output");
  cmd->callback([run_dir, compare, out] {
    std::vector<RunSummary> runs;
    runs.push_back(load_run(*run_dir));
    for (const auto& dir : *compare) runs.push_back(load_run(dir));
    const std::string markdown = render(runs);
    if (out->empty()) {
      std::cout << markdown;
    } else {
      write_text_file(*out, markdown);
      std::cout << "report -> " << *out << "\n";
    }
  });
}

}  // namespace taskpart::cli
