#include "robocoder/report.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "robocoder/text.hpp"

namespace robocoder {

namespace {

using nlohmann::json;

json iteration_json(const IterationRecord& r) {
  json j = {{"iteration", r.iteration},
            {"search", to_string(r.search_kind)},
            {"related", r.related},
            {"space_version", r.space_version},
            {"actor_calls", r.actor_calls},
            {"verdict", verdict_to_json(r.verdict)}};
  j["actor_error"] = r.actor_error ? json(*r.actor_error) : json(nullptr);
  j["return_code"] = r.return_code ? json(*r.return_code) : json(nullptr);
  j["feedback"] = r.feedback ? json(*r.feedback) : json(nullptr);
  return j;
}

json result_json(const TaskResult& r) {
  json attempts = json::array();
  for (const auto& a : r.attempts) attempts.push_back(iteration_json(a));
  return {{"id", r.task_id},
          {"entity", r.entity},
          {"task", r.text},
          {"status", to_string(r.status)},
          {"pass_iteration", r.pass_iteration},
          {"iterations_used", r.iterations_used},
          {"actor_calls", r.actor_calls},
          {"matched_action", r.matched_action},
          {"program", r.program ? json(serialize_program(*r.program)) : json(nullptr)},
          {"attempts", attempts}};
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#333333"};

std::vector<std::string> series_order(const RunReport& report) {
  auto order = report.entities;
  order.push_back("All");
  return order;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

json report_to_json(const RunReport& report) {
  json results = json::array();
  for (const auto& r : report.results) results.push_back(result_json(r));
  json events = json::array();
  for (const auto& e : report.events) events.push_back({{"task", e.task_id}, {"iteration", e.iteration}, {"completed", e.completed}});
  json sizes = json::array();
  for (const auto& s : report.space_sizes) {
    sizes.push_back({{"version", s.version}, {"size", s.size}, {"committed", s.committed}});
  }
  json cumulative = json::object();
  for (const auto& [entity, counts] : report.cumulative) cumulative[entity] = counts;
  return {{"run_id", report.run_id},
          {"mode", to_string(report.mode)},
          {"max_iterations", report.max_iterations},
          {"entities", report.entities},
          {"task_counts", report.task_counts},
          {"cumulative_passes", cumulative},
          {"space_sizes", sizes},
          {"actor_calls", report.actor_calls},
          {"events", events},
          {"results", results}};
}

RunReport report_from_json(const json& j) {
  RunReport r;
  r.run_id = j.at("run_id").get<std::string>();
  const auto mode = parse_update_mode(j.at("mode").get<std::string>());
  if (!mode) throw std::runtime_error("results.json: unknown mode");
  r.mode = *mode;
  r.max_iterations = j.at("max_iterations").get<int>();
  r.entities = j.at("entities").get<std::vector<std::string>>();
  r.task_counts = j.at("task_counts").get<std::map<std::string, std::size_t>>();
  r.cumulative = j.at("cumulative_passes").get<std::map<std::string, std::vector<std::size_t>>>();
  for (const auto& [entity, counts] : r.cumulative) {
    if (counts.size() != static_cast<std::size_t>(r.max_iterations) + 1) {
      throw std::runtime_error("results.json: cumulative passes for " + entity + " do not span 0..N");
    }
  }
  for (const auto& s : j.at("space_sizes")) {
    r.space_sizes.push_back({s.at("version").get<std::uint64_t>(), s.at("size").get<std::size_t>(),
                             s.at("committed").get<std::size_t>()});
  }
  r.actor_calls = j.at("actor_calls").get<std::size_t>();
  return r;
}

json timings_to_json(const RunReport& report) {
  const auto& t = report.timings;
  return {{"search_s", t.search_s}, {"actor_s", t.actor_s},         {"sim_s", t.sim_s},
          {"eval_s", t.eval_s},     {"commit_s", t.commit_s},       {"solve_wall_s", t.solve_wall_s},
          {"total_wall_s", t.total_wall_s}};
}

std::string pass_rate_csv(const RunReport& report) {
  std::ostringstream out;
  out << "entity,iteration,passed,total,pass_rate\n";
  for (const auto& entity : series_order(report)) {
    const auto counts = report.cumulative.find(entity);
    const auto total = report.task_counts.find(entity);
    if (counts == report.cumulative.end() || total == report.task_counts.end()) continue;
    for (int i = 1; i <= report.max_iterations; ++i) {
      out << entity << ',' << i << ',' << counts->second[static_cast<std::size_t>(i)] << ',' << total->second << ','
          << text::fixed(report.pass_rate(entity, i), 4) << '\n';
    }
  }
  return out.str();
}

std::string pass_rate_svg(const RunReport& report) {
  constexpr double width = 640, height = 400, left = 60, right = 150, top = 30, bottom = 50;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  const int n = report.max_iterations;
  const auto x_of = [&](int i) { return left + (n == 1 ? plot_w / 2 : plot_w * (i - 1) / (n - 1)); };
  const auto y_of = [&](double rate) { return top + plot_h * (1.0 - rate); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" data-x-max=\"" << n << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << left << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\">Cumulative pass rate ("
      << xml_escape(report.run_id) << ", " << to_string(report.mode) << ")</text>\n";
  out << "<g stroke=\"#999\" stroke-width=\"1\">\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\"" << top + plot_h
      << "\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h << "\"/>\n";
  out << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 1; i <= n; ++i) {
    out << "<text class=\"x-tick\" x=\"" << text::fixed(x_of(i), 1) << "\" y=\"" << top + plot_h + 16
        << "\" text-anchor=\"middle\">" << i << "</text>\n";
  }
  for (int pct = 0; pct <= 100; pct += 25) {
    out << "<text x=\"" << left - 6 << "\" y=\"" << text::fixed(y_of(pct / 100.0) + 4, 1) << "\" text-anchor=\"end\">"
        << pct << "%</text>\n";
  }
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">iteration</text>\n";
  out << "</g>\n";

  std::size_t color = 0;
  std::size_t row = 0;
  for (const auto& entity : series_order(report)) {
    if (!report.cumulative.count(entity)) continue;
    const char* stroke = entity == "All" ? kPalette[7] : kPalette[color++ % 7];
    out << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << (entity == "All" ? 3 : 2)
        << "\" data-series=\"" << xml_escape(entity) << "\" points=\"";
    for (int i = 1; i <= n; ++i) {
      if (i > 1) out << ' ';
      out << text::fixed(x_of(i), 1) << ',' << text::fixed(y_of(report.pass_rate(entity, i)), 1);
    }
    out << "\"/>\n";
    const double ly = top + 14.0 * static_cast<double>(row++);
    out << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + plot_w + 30 << "\" y2=\""
        << ly << "\" stroke=\"" << stroke << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << left + plot_w + 34 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(entity) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "results.json", report_to_json(report).dump(2) + "\n");
  write_text_file(dir / "pass_rate.csv", pass_rate_csv(report));
  write_text_file(dir / "pass_rate.svg", pass_rate_svg(report));
  write_text_file(dir / "timing.json", timings_to_json(report).dump(2) + "\n");
}

void render_report(const std::filesystem::path& dir) {
  json j;
  try {
    j = json::parse(read_text_file(dir / "results.json"));
  } catch (const json::exception& e) {
    throw std::runtime_error((dir / "results.json").string() + ": " + e.what());
  }
  const auto report = report_from_json(j);
  write_text_file(dir / "pass_rate.csv", pass_rate_csv(report));
  write_text_file(dir / "pass_rate.svg", pass_rate_svg(report));
}

}  // namespace robocoder
