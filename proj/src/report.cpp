#include "topobench/report.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "topobench/bundle.hpp"
#include "topobench/error.hpp"

namespace topobench {

using nlohmann::json;

ReportFormat parse_report_format(std::string_view s) {
  if (s == "table") return ReportFormat::table;
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  throw ConfigError("unknown format '" + std::string(s) + "' (expected table, json or csv)");
}

const std::vector<std::string>& report_metric_columns() {
  static const std::vector<std::string> cols = {"Runs",  "Detect-any %",    "Validated %",  "Partial",
                                                "Infra", "median TTFV (s)", "$/validated", "mean in tokens",
                                                "mean out tokens"};
  return cols;
}

namespace {

// A cell keeps the number it shows so every format carries identical values.
struct Cell {
  std::string text;
  json value;
};

Cell num(double v, int decimals) {
  const std::string text = fmt::format("{:.{}f}", v, decimals);
  return {text, json(std::stod(text))};
}

Cell count(std::size_t n) { return {std::to_string(n), json(n)}; }

Cell opt(const std::optional<double>& v, int decimals) { return v ? num(*v, decimals) : Cell{"-", json(nullptr)}; }

std::vector<Cell> metric_cells(const MetricsSummary& s) {
  return {count(s.n_runs),
          num(s.detect_any_rate * 100.0, 1),
          num(s.validated_rate * 100.0, 1),
          count(s.count(Label::partial)),
          count(s.count(Label::infra_error)),
          opt(s.median_ttfv, 1),
          opt(s.cost_per_validated, 4),
          num(s.mean_input_tokens, 1),
          num(s.mean_output_tokens, 1)};
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string emit_report(std::span<const MetricsSummary> summaries, ReportFormat format,
                        std::span<const std::string> key_columns) {
  std::vector<std::string> header(key_columns.begin(), key_columns.end());
  if (header.empty() && !summaries.empty()) {
    for (const auto& [dim, value] : summaries.front().key) header.push_back(dim);
  }
  const std::size_t n_keys = header.size();
  for (const auto& c : report_metric_columns()) header.push_back(c);

  std::vector<std::vector<Cell>> rows;
  for (const auto& s : summaries) {
    std::vector<Cell> row;
    for (std::size_t k = 0; k < n_keys; ++k) {
      const std::string v = k < s.key.size() ? s.key[k].second : "";
      row.push_back({v, json(v)});
    }
    for (auto& c : metric_cells(s)) row.push_back(std::move(c));
    rows.push_back(std::move(row));
  }

  std::string out;
  switch (format) {
    case ReportFormat::json: {
      json arr = json::array();
      for (const auto& row : rows) {
        json o = json::object();
        for (std::size_t i = 0; i < header.size(); ++i) o[header[i]] = row[i].value;
        arr.push_back(std::move(o));
      }
      out = arr.dump(2) + "\n";
      break;
    }
    case ReportFormat::csv: {
      for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + csv_escape(header[i]);
      out += '\n';
      for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_escape(row[i].text);
        out += '\n';
      }
      break;
    }
    case ReportFormat::table: {
      std::vector<std::size_t> width(header.size());
      for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
      for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].text.size());
      }
      auto line = [&](auto cell_text) {
        std::string l = "|";
        for (std::size_t i = 0; i < header.size(); ++i) {
          const std::string t = cell_text(i);
          l += ' ';
          l += i < n_keys ? fmt::format("{:<{}}", t, width[i]) : fmt::format("{:>{}}", t, width[i]);
          l += " |";
        }
        return l + "\n";
      };
      out += line([&](std::size_t i) { return header[i]; });
      std::string sep = "|";
      for (std::size_t i = 0; i < header.size(); ++i) {
        sep += i < n_keys ? " " + std::string(width[i], '-') + " |" : " " + std::string(width[i] - 1, '-') + ": |";
      }
      out += sep + "\n";
      for (const auto& row : rows) out += line([&](std::size_t i) { return row[i].text; });
      break;
    }
  }
  return out;
}

FrontierFiles emit_frontier(std::span<const FrontierPoint> points, const std::filesystem::path& out_dir) {
  std::vector<const FrontierPoint*> defined;
  for (const auto& p : points) {
    if (p.x) defined.push_back(&p);
  }
  if (defined.empty()) throw Error("no defined cost-per-validated points");

  std::vector<FrontierPoint> all(points.begin(), points.end());
  const auto front = pareto_frontier(all);
  auto on_front = [&](const FrontierPoint& p) {
    return std::any_of(front.begin(), front.end(), [&](const FrontierPoint& q) {
      return q.architecture == p.architecture && q.mode == p.mode;
    });
  };

  FrontierFiles files{out_dir / "frontier.csv", out_dir / "frontier.svg"};
  std::string csv = "architecture,mode,cost_per_validated,validated_rate,ci_lo,ci_hi,on_frontier\n";
  for (const auto& p : points) {
    csv += fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{}\n", to_string(p.architecture), to_string(p.mode),
                       p.x ? fmt::format("{:.6f}", *p.x) : std::string(), p.y, p.ci.lo, p.ci.hi,
                       on_front(p) ? "true" : "false");
  }
  write_file_atomic(files.csv, csv);

  constexpr double W = 720, H = 480, L = 70, R = 180, T = 30, B = 60;
  double max_x = 0;
  for (const auto* p : defined) max_x = std::max(max_x, *p->x);
  max_x = max_x > 0 ? max_x * 1.1 : 1.0;
  auto sx = [&](double x) { return L + (W - L - R) * x / max_x; };
  auto sy = [&](double y) { return H - B - (H - T - B) * std::clamp(y, 0.0, 1.0); };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      W, H);
  svg += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", W, H);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", L, H - B, W - R);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", L, H - B, T);
  for (int k = 0; k <= 4; ++k) {
    const double y = k / 4.0;
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.0f}%</text>\n", L - 6, sy(y) + 4,
                       y * 100);
    const double x = max_x * k / 4.0;
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">${:.3f}</text>\n", sx(x), H - B + 16, x);
  }
  svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">cost per validated finding ($)</text>\n",
                     (L + W - R) / 2, H - 15);
  svg += fmt::format(
      "<text x=\"15\" y=\"{:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 15 {:.1f})\">validated detection</text>\n",
      (T + H - B) / 2, (T + H - B) / 2);

  std::string path;
  for (const auto& p : front) path += fmt::format("{}{:.1f},{:.1f}", path.empty() ? "" : " ", sx(*p.x), sy(p.y));
  if (!path.empty()) {
    svg += "<polyline class=\"frontier\" fill=\"none\" stroke=\"#c0392b\" stroke-dasharray=\"4 3\" points=\"" + path +
           "\"/>\n";
  }
  for (const auto* p : defined) {
    const double x = sx(*p->x);
    const bool f = on_front(*p);
    const char* colour = p->mode == Mode::whitebox ? "#2c3e50" : "#2980b9";
    svg += fmt::format("<line class=\"whisker\" x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"{3}\"/>\n",
                       x, sy(p->ci.lo), sy(p->ci.hi), colour);
    svg += fmt::format(
        "<circle class=\"marker{}\" cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"5\" stroke=\"{}\" fill=\"{}\"><title>{}</title></circle>\n",
        f ? " frontier" : "", x, sy(p->y), colour, f ? colour : "white", p->label());
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", x + 8, sy(p->y) + 4, p->label());
  }
  svg += "</svg>\n";
  write_file_atomic(files.svg, svg);
  return files;
}

}  // namespace topobench
