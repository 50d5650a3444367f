#include "taskpart/evalrep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "taskpart/errors.hpp"
#include "taskpart/pipeline.hpp"
#include "taskpart/text.hpp"

namespace taskpart::evalrep {

namespace {

// Linear interpolation between order statistics at 1-indexed position
// 1 + (n-1)q.
double quantile(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = (static_cast<double>(n) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::string percent_1dp(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", rate * 100.0);
  return buf;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

constexpr const char* kPalette[8] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                     "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

EvalStats summarize(const std::map<std::string, double>& rates) {
  if (rates.empty()) throw EmptyInput("summarize requires a non-empty rate map");
  std::vector<double> values;
  values.reserve(rates.size());
  double sum = 0.0;
  for (const auto& [id, rate] : rates) {
    if (!(rate >= 0.0 && rate <= 1.0)) {
      throw ValidationError("rate for '" + id + "' is outside [0, 1]");
    }
    values.push_back(rate);
    sum += rate;
  }
  std::sort(values.begin(), values.end());

  EvalStats stats;
  stats.per_variation = rates;
  stats.average = sum / static_cast<double>(values.size());
  stats.low = values.front();
  stats.high = values.back();
  stats.median = quantile(values, 0.5);
  stats.lower_quartile = quantile(values, 0.25);
  stats.upper_quartile = quantile(values, 0.75);
  return stats;
}

std::vector<std::string> select_low_performers(const std::map<std::string, double>& rates,
                                               const SelectionRule& rule) {
  if (rates.empty()) throw EmptyInput("selection requires a non-empty rate map");
  std::vector<std::pair<double, std::string>> order;
  order.reserve(rates.size());
  for (const auto& [id, rate] : rates) order.emplace_back(rate, id);
  std::sort(order.begin(), order.end());  // ascending rate, then id

  std::vector<std::string> selected;
  if (rule.n.has_value()) {
    if (*rule.n > order.size()) {
      throw InvalidN("worst_n=" + std::to_string(*rule.n) + " exceeds map size " +
                     std::to_string(order.size()));
    }
    for (std::size_t i = 0; i < *rule.n; ++i) selected.push_back(order[i].second);
  } else {
    const double median = summarize(rates).median;
    for (const auto& [rate, id] : order) {
      if (rate < median) selected.push_back(id);
    }
  }
  return selected;
}

TableDocument comparison_table(const std::vector<ComparisonRow>& rows) {
  if (rows.empty()) throw EmptyInput("comparison table requires at least one row");
  std::ostringstream md;
  std::ostringstream csv;
  md << "| Agent | Specialists | Average |\n";
  md << "| --- | --- | --- |\n";
  csv << "agent,n_specialists,average\n";
  for (const auto& row : rows) {
    const std::string count =
        row.n_specialists.has_value() ? std::to_string(*row.n_specialists) : "";
    md << "| " << row.label << " | " << (count.empty() ? std::string("\xE2\x80\x94") : count)
       << " | " << percent_1dp(row.stats.average) << " |\n";
    csv << csv_field(row.label) << ',' << count << ',' << format_double(row.stats.average)
        << '\n';
  }
  return {md.str(), csv.str()};
}

void cluster_scatter_svg(const featex::FeatureMatrix& features2d,
                         const cluster::Partition& partition, std::ostream& out) {
  if (features2d.dim != 2) {
    throw DimensionMismatch("scatter needs 2-D features, got dim " +
                            std::to_string(features2d.dim));
  }
  std::map<std::string, std::size_t> cluster_of;
  for (std::size_t c = 0; c < partition.clusters.size(); ++c) {
    for (const auto& id : partition.clusters[c]) cluster_of[id] = c;
  }

  const double width = 800.0, height = 600.0;
  const double mx = width * 0.05, my = height * 0.05;

  double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
  bool first = true;
  for (const auto& row : features2d.rows) {
    if (first) {
      min_x = max_x = row.values[0];
      min_y = max_y = row.values[1];
      first = false;
    } else {
      min_x = std::min(min_x, row.values[0]);
      max_x = std::max(max_x, row.values[0]);
      min_y = std::min(min_y, row.values[1]);
      max_y = std::max(max_y, row.values[1]);
    }
  }
  auto map_x = [&](double x) {
    if (max_x == min_x) return width / 2.0;
    return mx + (x - min_x) / (max_x - min_x) * (width - 2.0 * mx);
  };
  auto map_y = [&](double y) {
    if (max_y == min_y) return height / 2.0;
    return my + (max_y - y) / (max_y - min_y) * (height - 2.0 * my);
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
         "viewBox=\"0 0 800 600\">\n";
  out << "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
  for (const auto& row : features2d.rows) {
    auto it = cluster_of.find(row.id);
    if (it == cluster_of.end()) {
      throw ValidationError("id '" + row.id + "' is missing from the partition");
    }
    const char* color = kPalette[it->second % 8];
    const double sx = map_x(row.values[0]);
    const double sy = map_y(row.values[1]);
    out << "<circle cx=\"" << format_double(sx) << "\" cy=\"" << format_double(sy)
        << "\" r=\"6\" fill=\"" << color << "\" stroke=\"#333333\"/>\n";
    out << "<text x=\"" << format_double(sx + 8.0) << "\" y=\"" << format_double(sy + 4.0)
        << "\" font-size=\"10\" font-family=\"sans-serif\">" << row.id << "</text>\n";
  }
  // Legend with cluster sizes.
  double ly = my + 10.0;
  for (std::size_t c = 0; c < partition.clusters.size(); ++c) {
    out << "<rect x=\"" << format_double(mx) << "\" y=\"" << format_double(ly - 9.0)
        << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[c % 8] << "\"/>\n";
    out << "<text x=\"" << format_double(mx + 18.0) << "\" y=\"" << format_double(ly + 2.0)
        << "\" font-size=\"12\" font-family=\"sans-serif\">cluster " << c << " ("
        << partition.clusters[c].size() << " members)</text>\n";
    ly += 18.0;
  }
  out << "</svg>\n";
}

std::map<std::string, double> rates_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "id,rate") {
    throw ValidationError("rate CSV must start with header 'id,rate'");
  }
  std::map<std::string, double> rates;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view stripped = trim(line);
    if (stripped.empty()) continue;
    auto fields = split(stripped, ',');
    if (fields.size() != 2) throw MalformedRecord(line_no, "expected 'id,rate'");
    auto value = parse_double(fields[1]);
    if (!value) throw MalformedNumber(line_no, 2, std::string(fields[1]));
    if (!rates.emplace(std::string(fields[0]), *value).second) {
      throw DuplicateId(std::string(fields[0]));
    }
  }
  return rates;
}

std::string rates_to_csv(const std::map<std::string, double>& rates) {
  std::ostringstream out;
  out << "id,rate\n";
  for (const auto& [id, rate] : rates) out << id << ',' << format_double(rate) << '\n';
  return out.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string digest_hex(std::string_view bytes) {
  static const char* hex = "0123456789abcdef";
  std::uint64_t h = fnv1a64(bytes);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

namespace {

std::string render_report(const gslsim::RunResult& result) {
  std::ostringstream md;
  md << "# Run report\n\n";
  md << "- method: " << cluster::method_name(result.method) << "\n";
  md << "- specialists: " << result.config.n_specialists << "\n";
  md << "- master seed: " << result.config.master_seed << "\n";
  md << "- variations: " << result.variations.size() << " (" << result.selected.size()
     << " selected low performers)\n\n";

  md << "## Phase 1 generalist, all variations\n\n";
  md << "| Average | Median | High | Low | Upper quartile | Lower quartile |\n";
  md << "| --- | --- | --- | --- | --- | --- |\n";
  md << "| " << percent_1dp(result.phase1.average) << " | " << percent_1dp(result.phase1.median)
     << " | " << percent_1dp(result.phase1.high) << " | " << percent_1dp(result.phase1.low)
     << " | " << percent_1dp(result.phase1.upper_quartile) << " | "
     << percent_1dp(result.phase1.lower_quartile) << " |\n\n";

  md << "## Success on the selected low performers\n\n";
  EvalStats phase1_selected;
  phase1_selected.average = result.phase1_selected_avg;
  EvalStats phase3_selected;
  phase3_selected.average = result.phase3_selected_avg;
  std::vector<ComparisonRow> rows = {
      {"Generalist (Phase 1)", std::nullopt, phase1_selected},
      {"Specialists (" + cluster::method_name(result.method) + ")",
       result.config.n_specialists, result.specialist_phase},
      {"Generalist (Phase 3)", std::nullopt, phase3_selected},
  };
  md << comparison_table(rows).markdown << "\n";

  md << "## Clusters\n\n";
  md << "Sorted sizes:";
  for (std::size_t s : result.partition.sorted_sizes()) md << ' ' << s;
  md << "\n\n";
  md << "| Specialist | Variations | Average |\n";
  md << "| --- | --- | --- |\n";
  for (const auto& spec : result.specialists) {
    md << "| " << spec.cluster_index << " | " << spec.members.size() << " | "
       << percent_1dp(spec.mean_success) << " |\n";
  }
  md << "\n";

  md << "## Demonstrations\n\n";
  md << "Collected " << result.demos_collected << " of " << result.demos_requested
     << " requested trajectories (shortfall " << result.demo_shortfall << ", attempts "
     << result.demo_attempts << ").\n\n";

  md << "## Final generalist, all variations\n\n";
  md << "| Average | Median | High | Low | Upper quartile | Lower quartile |\n";
  md << "| --- | --- | --- | --- | --- | --- |\n";
  md << "| " << percent_1dp(result.final_stats.average) << " | "
     << percent_1dp(result.final_stats.median) << " | " << percent_1dp(result.final_stats.high)
     << " | " << percent_1dp(result.final_stats.low) << " | "
     << percent_1dp(result.final_stats.upper_quartile) << " | "
     << percent_1dp(result.final_stats.lower_quartile) << " |\n";
  return md.str();
}

}  // namespace

Manifest persist_run(const gslsim::RunResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory", dir.string());

  std::map<std::string, std::string> artifacts;
  artifacts["config.json"] = gslsim::to_json(result.config);

  {
    std::ostringstream buf;
    featex::write_features_csv(result.features, buf);
    artifacts["features.csv"] = buf.str();
  }
  artifacts["pca_model.json"] = featproc::to_json(result.pca);
  artifacts["partition.json"] = cluster::to_json(result.partition);
  artifacts["phase1_rates.csv"] = rates_to_csv(result.phase1.per_variation);

  {
    std::ostringstream buf;
    buf << "specialist,variation_id,rate\n";
    for (const auto& spec : result.specialists) {
      for (const auto& [id, rate] : spec.rates) {
        buf << spec.cluster_index << ',' << id << ',' << format_double(rate) << '\n';
      }
    }
    artifacts["specialist_rates.csv"] = buf.str();
  }
  artifacts["final_rates.csv"] = rates_to_csv(result.final_stats.per_variation);
  artifacts["report.md"] = render_report(result);

  {
    std::ostringstream buf;
    cluster_scatter_svg(result.features2d, result.partition, buf);
    artifacts["scatter.svg"] = buf.str();
  }

  Manifest manifest;
  for (const auto& [name, content] : artifacts) {
    write_text_file(dir / name, content);
    manifest.digests[name] = digest_hex(content);
  }

  nlohmann::json doc;
  doc["files"] = manifest.digests;
  write_text_file(dir / "manifest.json", doc.dump(2) + "\n");
  return manifest;
}

Manifest load_manifest(const std::filesystem::path& dir) {
  const std::string text = read_text_file(dir / "manifest.json");
  try {
    nlohmann::json doc = nlohmann::json::parse(text);
    Manifest manifest;
    manifest.digests = doc.at("files").get<std::map<std::string, std::string>>();
    return manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad manifest in '" + dir.string() + "': " + e.what());
  }
}

std::vector<std::string> verify_manifest(const std::filesystem::path& dir) {
  const Manifest manifest = load_manifest(dir);
  std::vector<std::string> mismatched;
  for (const auto& [name, digest] : manifest.digests) {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) {
      mismatched.push_back(name);
      continue;
    }
    if (digest_hex(read_text_file(path)) != digest) mismatched.push_back(name);
  }
  return mismatched;
}

}  // namespace taskpart::evalrep
