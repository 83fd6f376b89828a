// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "enhgan/plot.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace enhgan {

void write_bar_chart_svg(const std::string& path, const std::string& title,
                         const std::vector<std::pair<std::string, double>>& bars) {
  if (bars.empty()) throw std::invalid_argument("write_bar_chart_svg: no bars");
  const int width = 160 + static_cast<int>(bars.size()) * 110;
  const int height = 320;
  const int base_y = 260;
  const int top_y = 50;

  double vmax = 0.0, vmin = 0.0;
  for (const auto& [label, v] : bars) {
    vmax = std::max(vmax, v);
    vmin = std::min(vmin, v);
  }
  if (vmax == vmin) vmax = vmin + 1.0;

  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_bar_chart_svg: cannot open " + path);
  char buf[512];
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\">\n";
  f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"28\" font-family=\"sans-serif\" font-size=\"18\" "
                "text-anchor=\"middle\">%s</text>\n",
                width / 2, title.c_str());
  f << buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"60\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n", base_y,
                width - 40, base_y);
  f << buf;

  const char* colors[] = {"#4878cf", "#ee854a", "#6acc65", "#d65f5f", "#956cb4", "#8c613c"};
  for (size_t i = 0; i < bars.size(); ++i) {
    const double v = bars[i].second;
    const double frac = (v - std::min(0.0, vmin)) / (vmax - std::min(0.0, vmin));
    const int h = std::max(1, static_cast<int>(frac * (base_y - top_y)));
    const int x = 80 + static_cast<int>(i) * 110;
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%d\" y=\"%d\" width=\"70\" height=\"%d\" fill=\"%s\"/>\n", x,
                  base_y - h, h, colors[i % 6]);
    f << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"13\" "
                  "text-anchor=\"middle\">%.3f</text>\n",
                  x + 35, base_y - h - 6, v);
    f << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"13\" "
                  "text-anchor=\"middle\">%s</text>\n",
                  x + 35, base_y + 20, bars[i].first.c_str());
    f << buf;
  }
  f << "</svg>\n";
}

}  // namespace enhgan
