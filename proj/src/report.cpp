/* Copyright 2026 The SIO Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "sio/experiment.hpp"

namespace sio {

void save_results(const ResultTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << kResultsHeader << '\n';
  for (const auto& r : table) {
    out << r.axis << ',' << format_double(r.value) << ',' << r.seed << ',' << r.arm << ','
        << r.scorer << ',' << r.split << ',' << format_double(r.auroc) << ','
        << format_double(r.fpr95) << ',' << format_double(r.id_acc) << ','
        << format_double(r.frechet) << ',' << r.steps << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ResultTable load_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != kResultsHeader) {
    throw ParseError(path.string() + ":1: unexpected results header");
  }
  ResultTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto c = split_string(trim(line), ',');
    if (c.size() != 11) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 11 cells");
    }
    try {
      table.push_back({c[0], parse_double(c[1]), static_cast<std::uint64_t>(parse_int(c[2])), c[3],
                       c[4], c[5], parse_double(c[6]), parse_double(c[7]), parse_double(c[8]),
                       parse_double(c[9]), static_cast<long>(parse_int(c[10]))});
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

namespace {

struct Stat {
  double mean = 0.0, stdev = 0.0;
};

Stat mean_std(const std::vector<double>& v) {
  Stat s;
  for (double x : v) s.mean += x;
  s.mean /= double(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stdev = std::sqrt(ss / double(v.size() - 1));
  }
  return s;
}

using GroupKey = std::tuple<std::string, double, std::string, std::string, std::string>;

}  // namespace

std::vector<SummaryRow> summarize(const ResultTable& table) {
  std::map<GroupKey, std::vector<const ResultRow*>> groups;
  for (const auto& r : table) groups[{r.axis, r.value, r.arm, r.scorer, r.split}].push_back(&r);
  std::vector<SummaryRow> out;
  for (const auto& [key, rows] : groups) {
    std::vector<double> au, fp, acc, fr;
    for (const auto* r : rows) {
      au.push_back(r->auroc);
      fp.push_back(r->fpr95);
      acc.push_back(r->id_acc);
      fr.push_back(r->frechet);
    }
    SummaryRow s;
    std::tie(s.axis, s.value, s.arm, s.scorer, s.split) = key;
    const Stat a = mean_std(au), f = mean_std(fp), c = mean_std(acc);
    s.auroc_mean = a.mean;
    s.auroc_std = a.stdev;
    s.fpr95_mean = f.mean;
    s.fpr95_std = f.stdev;
    s.id_acc_mean = c.mean;
    s.id_acc_std = c.stdev;
    s.frechet_mean = mean_std(fr).mean;
    s.n_seeds = rows.size();
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

struct Frame {
  double x0, x1, y0, y1;
  static constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;

  double px(double x) const {
    const double span = x1 > x0 ? x1 - x0 : 1.0;
    return kLeft + (x - x0) / span * (kW - kLeft - kRight);
  }
  double py(double y) const {
    const double span = y1 > y0 ? y1 - y0 : 1.0;
    return kH - kBottom - (y - y0) / span * (kH - kTop - kBottom);
  }
};

std::string fmt(double v) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(2);
  o << v;
  return o.str();
}

Frame padded_frame(double x0, double x1, double y0, double y1) {
  const double dx = x1 > x0 ? 0.05 * (x1 - x0) : 0.5;
  const double dy = y1 > y0 ? 0.1 * (y1 - y0) : 0.05;
  return {x0 - dx, x1 + dx, y0 - dy, y1 + dy};
}

void svg_open(std::ostream& o, const Frame& f, const std::string& title, const std::string& xlabel,
              const std::string& ylabel) {
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Frame::kW << "\" height=\""
    << Frame::kH << "\" viewBox=\"0 0 " << Frame::kW << ' ' << Frame::kH << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << Frame::kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << title << "</text>\n";
  const double left = Frame::kLeft, bottom = Frame::kH - Frame::kBottom;
  const double right = Frame::kW - Frame::kRight;
  o << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
    << bottom << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << left << "\" y1=\"" << Frame::kTop << "\" x2=\"" << left << "\" y2=\""
    << bottom << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    o << "<text x=\"" << f.px(xv) << "\" y=\"" << bottom + 18
      << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(xv) << "</text>\n"
      << "<text x=\"" << left - 8 << "\" y=\"" << f.py(yv) + 4
      << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(yv) << "</text>\n";
  }
  o << "<text x=\"" << (left + right) / 2 << "\" y=\"" << Frame::kH - 15
    << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel << "</text>\n"
    << "<text x=\"18\" y=\"" << (Frame::kTop + bottom) / 2
    << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
    << (Frame::kTop + bottom) / 2 << ")\">" << ylabel << "</text>\n";
}

void legend_entry(std::ostream& o, int i, const std::string& label, const char* color) {
  const double x = Frame::kW - Frame::kRight + 15, y = Frame::kTop + 18 * i;
  o << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\"" << color
    << "\"/>\n<text x=\"" << x + 18 << "\" y=\"" << y + 10 << "\" font-size=\"12\">" << label
    << "</text>\n";
}

/// x = sweep value, y = seed-mean SIO near-OOD AUROC; one polyline per scorer.
void write_line_chart(const std::vector<SummaryRow>& summary, const std::string& axis,
                      const std::filesystem::path& path) {
  std::map<std::string, std::vector<std::pair<double, double>>> lines;
  for (const auto& s : summary) {
    if (s.axis == axis && s.arm == "sio" && s.split == "near") {
      lines[s.scorer].emplace_back(s.value, s.auroc_mean);
    }
  }
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& [_, pts] : lines) {
    for (const auto& [x, y] : pts) {
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  }
  const Frame f = padded_frame(x0, x1, y0, y1);
  std::ofstream o(path, std::ios::binary);
  if (!o) throw std::runtime_error("cannot open for writing: " + path.string());
  svg_open(o, f, "Near-OOD AUROC vs " + axis, axis, "mean AUROC (near)");
  int i = 0;
  for (auto& [scorer, pts] : lines) {
    std::sort(pts.begin(), pts.end());
    const char* color = kPalette[i % 10];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t p = 0; p < pts.size(); ++p) {
      o << (p ? " " : "") << f.px(pts[p].first) << ',' << f.py(pts[p].second);
    }
    o << "\"/>\n";
    legend_entry(o, i, scorer, color);
    ++i;
  }
  o << "</svg>\n";
}

/// One point per (value, seed, arm): ID accuracy against near-OOD AUROC
/// averaged over scorers.
void write_scatter(const ResultTable& table, const std::filesystem::path& path) {
  std::map<std::tuple<std::string, double, std::uint64_t>, std::pair<double, std::vector<double>>>
      points;
  for (const auto& r : table) {
    if (r.split != "near") continue;
    auto& p = points[{r.arm, r.value, r.seed}];
    p.first = r.id_acc;
    p.second.push_back(r.auroc);
  }
  std::vector<std::tuple<std::string, double, double>> xy;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& [key, p] : points) {
    const double y = mean_std(p.second).mean;
    xy.emplace_back(std::get<0>(key), p.first, y);
    x0 = std::min(x0, p.first), x1 = std::max(x1, p.first);
    y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  const Frame f = padded_frame(x0, x1, y0, y1);
  std::ofstream o(path, std::ios::binary);
  if (!o) throw std::runtime_error("cannot open for writing: " + path.string());
  svg_open(o, f, "ID accuracy vs near-OOD AUROC", "ID accuracy", "mean AUROC (near)");
  for (const auto& [arm, x, y] : xy) {
    const char* color = arm == "sio" ? kPalette[0] : kPalette[3];
    o << "<circle cx=\"" << f.px(x) << "\" cy=\"" << f.py(y) << "\" r=\"4\" fill=\"" << color
      << "\" fill-opacity=\"0.7\"/>\n";
  }
  legend_entry(o, 0, "sio", kPalette[0]);
  legend_entry(o, 1, "baseline", kPalette[3]);
  o << "</svg>\n";
}

}  // namespace

std::vector<std::filesystem::path> write_report(const ResultTable& table,
                                                const std::filesystem::path& out_dir) {
  if (table.empty()) throw ConfigError("report: empty result table");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  written.push_back(out_dir / "results.csv");
  save_results(table, written.back());

  const auto summary = summarize(table);
  std::set<std::string> axes;
  for (const auto& s : summary) axes.insert(s.axis);
  for (const auto& axis : axes) {
    const auto csv = out_dir / ("summary_" + axis + ".csv");
    std::ofstream out(csv, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + csv.string());
    out << "axis,value,arm,scorer,split,auroc_mean,auroc_std,fpr95_mean,fpr95_std,id_acc_mean,"
           "id_acc_std,frechet_mean,n_seeds\n";
    for (const auto& s : summary) {
      if (s.axis != axis) continue;
      out << s.axis << ',' << format_double(s.value) << ',' << s.arm << ',' << s.scorer << ','
          << s.split << ',' << format_double(s.auroc_mean) << ',' << format_double(s.auroc_std)
          << ',' << format_double(s.fpr95_mean) << ',' << format_double(s.fpr95_std) << ','
          << format_double(s.id_acc_mean) << ',' << format_double(s.id_acc_std) << ','
          << format_double(s.frechet_mean) << ',' << s.n_seeds << '\n';
    }
    written.push_back(csv);
    const auto svg = out_dir / ("chart_" + axis + ".svg");
    write_line_chart(summary, axis, svg);
    written.push_back(svg);
  }
  written.push_back(out_dir / "scatter_acc_vs_near.svg");
  write_scatter(table, written.back());
  return written;
}

}  // namespace sio
