#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace mfpd::svg {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> pts;
};

namespace detail {
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}
} // namespace detail

/// Minimal line plot, optionally log-scaled per axis. Nonpositive values are
/// dropped on log axes.
inline void write_line_plot(const std::string& path, const std::string& title,
                            const std::string& xlabel, const std::string& ylabel,
                            const std::vector<Series>& series, bool logx, bool logy) {
    const double W = 640, H = 480, L = 70, R = 20, T = 40, B = 50;
    auto tx = [&](double v) { return logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return logy ? std::log10(v) : v; };

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (auto [x, y] : s.pts) {
            if ((logx && x <= 0) || (logy && y <= 0)) continue;
            xmin = std::min(xmin, tx(x));
            xmax = std::max(xmax, tx(x));
            ymin = std::min(ymin, ty(y));
            ymax = std::max(ymax, ty(y));
        }
    if (xmin > xmax) { xmin = 0; xmax = 1; }
    if (ymin > ymax) { ymin = 0; ymax = 1; }
    if (xmax - xmin < 1e-12) { xmax += 0.5; xmin -= 0.5; }
    if (ymax - ymin < 1e-12) { ymax += 0.5; ymin -= 0.5; }

    auto px = [&](double v) { return L + (tx(v) - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double v) { return H - B - (ty(v) - ymin) / (ymax - ymin) * (H - T - B); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::ofstream os(path);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='15'>" << title
       << "</text>\n";
    os << "<text x='" << W / 2 << "' y='" << H - 8 << "' text-anchor='middle' font-size='12'>"
       << xlabel << "</text>\n";
    os << "<text x='14' y='" << H / 2 << "' text-anchor='middle' font-size='12' transform='rotate(-90 14 "
       << H / 2 << ")'>" << ylabel << "</text>\n";
    os << "<rect x='" << L << "' y='" << T << "' width='" << W - L - R << "' height='"
       << H - T - B << "' fill='none' stroke='black'/>\n";

    // axis ticks: 5 per axis, labeled in data units
    for (int k = 0; k <= 4; ++k) {
        const double fx = xmin + (xmax - xmin) * k / 4.0;
        const double fy = ymin + (ymax - ymin) * k / 4.0;
        const double vx = logx ? std::pow(10.0, fx) : fx;
        const double vy = logy ? std::pow(10.0, fy) : fy;
        const double X = L + (W - L - R) * k / 4.0;
        const double Y = H - B - (H - T - B) * k / 4.0;
        os << "<line x1='" << X << "' y1='" << H - B << "' x2='" << X << "' y2='" << H - B + 5
           << "' stroke='black'/>\n";
        os << "<text x='" << X << "' y='" << H - B + 18 << "' text-anchor='middle' font-size='10'>"
           << detail::fmt(vx) << "</text>\n";
        os << "<line x1='" << L - 5 << "' y1='" << Y << "' x2='" << L << "' y2='" << Y
           << "' stroke='black'/>\n";
        os << "<text x='" << L - 8 << "' y='" << Y + 4 << "' text-anchor='end' font-size='10'>"
           << detail::fmt(vy) << "</text>\n";
    }

    for (std::size_t si = 0; si < series.size(); ++si) {
        const char* col = colors[si % 5];
        std::string poly;
        for (auto [x, y] : series[si].pts) {
            if ((logx && x <= 0) || (logy && y <= 0)) continue;
            poly += detail::fmt(px(x)) + "," + detail::fmt(py(y)) + " ";
        }
        os << "<polyline points='" << poly << "' fill='none' stroke='" << col
           << "' stroke-width='1.5'/>\n";
        for (auto [x, y] : series[si].pts) {
            if ((logx && x <= 0) || (logy && y <= 0)) continue;
            os << "<circle cx='" << detail::fmt(px(x)) << "' cy='" << detail::fmt(py(y))
               << "' r='2.5' fill='" << col << "'/>\n";
        }
        os << "<text x='" << W - R - 10 << "' y='" << T + 16 + 14 * si
           << "' text-anchor='end' font-size='11' fill='" << col << "'>" << series[si].label
           << "</text>\n";
    }
    os << "</svg>\n";
}

} // namespace mfpd::svg
