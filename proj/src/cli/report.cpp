#include "graspforge/cli/cli.hpp"

#include "graspforge/error.hpp"
#include "json.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace graspforge {

namespace {

constexpr double kWidth = 720.0, kHeight = 420.0;
constexpr double kLeft = 70.0, kRight = 70.0, kTop = 50.0, kBottom = 60.0;
constexpr const char* kColors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

std::string header(const std::string& title) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">{3}</text>\n",
      kWidth, kHeight, kWidth / 2, escape(title));
}

// Frame plus horizontal grid lines for a [0, top] left axis.
std::string left_axis(double top, int ticks, const std::string& label, const char* number_format) {
  const double plot_h = kHeight - kTop - kBottom;
  std::string out;
  for (int i = 0; i <= ticks; ++i) {
    const double v = top * i / ticks;
    const double y = kHeight - kBottom - plot_h * i / ticks;
    out += fmt::format("<line x1=\"{}\" y1=\"{:.1f}\" x2=\"{}\" y2=\"{:.1f}\" stroke=\"#dddddd\"/>\n", kLeft, y,
                       kWidth - kRight, y);
    out += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", kLeft - 6, y + 4,
                       fmt::format(fmt::runtime(number_format), v));
  }
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
                     kTop, kWidth - kLeft - kRight, plot_h);
  out += fmt::format("<text transform=\"translate(18 {:.1f}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
                     kTop + plot_h / 2, escape(label));
  return out;
}

std::string legend_entry(int i, const std::string& name, const char* color, bool dashed = false) {
  const double x = kLeft + 10 + 150.0 * i, y = kTop + 14;
  return fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"6\"{4}/>\n"
      "<text x=\"{5}\" y=\"{6}\">{7}</text>\n",
      x, y, x + 20, color, dashed ? " stroke-dasharray=\"4 3\"" : "", x + 26, y + 4, escape(name));
}

}  // namespace

std::string success_chart_svg(const std::vector<EvalStats>& stats) {
  std::set<int> counts;
  for (const auto& s : stats) {
    for (const auto& [c, r] : s.by_cable_count) counts.insert(c);
  }
  std::string out = header("Success rate by cable count");
  out += left_axis(1.0, 4, "success rate", "{:.2f}");
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  const double group_w = counts.empty() ? plot_w : plot_w / static_cast<double>(counts.size());
  const double bar_w = 0.8 * group_w / std::max<std::size_t>(1, stats.size());
  auto y_of = [&](double v) { return kHeight - kBottom - plot_h * v; };
  int g = 0;
  for (int count : counts) {
    const double x0 = kLeft + group_w * g + 0.1 * group_w;
    for (std::size_t k = 0; k < stats.size(); ++k) {
      auto it = stats[k].by_cable_count.find(count);
      if (it == stats[k].by_cable_count.end()) continue;
      const RateSummary& r = it->second;
      const double x = x0 + bar_w * static_cast<double>(k);
      const char* color = kColors[k % std::size(kColors)];
      out += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\">"
                         "<title>{} cables, {}: {}/{}</title></rect>\n",
                         x, y_of(r.rate), bar_w, plot_h * r.rate, color, count, escape(stats[k].policy), r.successes,
                         r.trials);
      const double cx = x + bar_w / 2;
      out += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n", cx,
                         y_of(r.wilson_low), y_of(r.wilson_high));
    }
    out += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kLeft + group_w * (g + 0.5),
                       kHeight - kBottom + 16, count);
    ++g;
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">cables in scene</text>\n", kLeft + plot_w / 2,
                     kHeight - 16);
  for (std::size_t k = 0; k < stats.size(); ++k) {
    out += legend_entry(static_cast<int>(k),
                        fmt::format("{} ({:.1f}%)", stats[k].policy, 100.0 * stats[k].overall.rate),
                        kColors[k % std::size(kColors)]);
  }
  return out + "</svg>\n";
}

std::string loss_curve_svg(const std::vector<EpochMetrics>& log) {
  double top = 0.0;
  for (const auto& e : log) top = std::max(top, e.train_loss);
  top = top > 0.0 ? top * 1.1 : 1.0;
  std::string out = header("Training loss and validation accuracy");
  out += left_axis(top, 5, "train loss", "{:.3f}");
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  for (int i = 0; i <= 4; ++i) {
    out += fmt::format("<text x=\"{}\" y=\"{:.1f}\">{:.2f}</text>\n", kWidth - kRight + 6,
                       kHeight - kBottom - plot_h * i / 4 + 4, i / 4.0);
  }
  out += fmt::format("<text transform=\"translate({} {:.1f}) rotate(90)\" text-anchor=\"middle\">val accuracy</text>\n",
                     kWidth - 18, kTop + plot_h / 2);
  const double span = log.size() > 1 ? static_cast<double>(log.back().epoch - log.front().epoch) : 1.0;
  auto x_of = [&](const EpochMetrics& e) {
    return log.size() > 1 ? kLeft + plot_w * (e.epoch - log.front().epoch) / span : kLeft + plot_w / 2;
  };
  std::string loss, acc;
  for (const auto& e : log) {
    loss += fmt::format("{:.1f},{:.1f} ", x_of(e), kHeight - kBottom - plot_h * e.train_loss / top);
    acc += fmt::format("{:.1f},{:.1f} ", x_of(e), kHeight - kBottom - plot_h * e.val_acc);
  }
  out += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n", loss, kColors[0]);
  out += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\" stroke-dasharray=\"4 3\"/>\n",
                     acc, kColors[1]);
  if (!log.empty()) {
    for (const EpochMetrics* e : {&log.front(), &log.back()}) {
      out += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x_of(*e),
                         kHeight - kBottom + 16, e->epoch);
    }
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">epoch</text>\n", kLeft + plot_w / 2, kHeight - 16);
  out += legend_entry(0, "train loss", kColors[0]);
  out += legend_entry(1, "val accuracy", kColors[1], true);
  return out + "</svg>\n";
}

EvalStats parse_stats(const std::string& text) {
  auto rate = [](const nlohmann::json& j) {
    RateSummary r;
    r.trials = j.at("trials").get<int>();
    r.successes = j.at("successes").get<int>();
    r.rate = j.at("rate").get<double>();
    r.wilson_low = j.at("wilson_low").get<double>();
    r.wilson_high = j.at("wilson_high").get<double>();
    return r;
  };
  try {
    const auto j = nlohmann::json::parse(text);
    EvalStats s;
    s.policy = j.at("policy").get<std::string>();
    s.overall = rate(j);
    s.failures_by_reason = j.at("failures_by_reason").get<std::map<std::string, int>>();
    for (const auto& [key, value] : j.at("by_cable_count").items()) s.by_cable_count[std::stoi(key)] = rate(value);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error("InvalidStats", e.what());
  } catch (const std::logic_error& e) {
    throw Error("InvalidStats", e.what());
  }
}

}  // namespace graspforge
