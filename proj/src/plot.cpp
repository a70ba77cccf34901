#include "fgmhd/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "fgmhd/errors.hpp"

namespace fgmhd {

namespace {

constexpr double kWidth = 800.0, kHeight = 500.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// tick step snapped to 1/2/5 * 10^k, aiming for ~6 intervals
double nice_step(double span) {
    if (span <= 0.0) return 1.0;
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double frac = raw / mag;
    double step = 10.0;
    if (frac <= 1.0)
        step = 1.0;
    else if (frac <= 2.0)
        step = 2.0;
    else if (frac <= 5.0)
        step = 5.0;
    return step * mag;
}

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<PlotSeries>& series) {
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    bool first = true;
    for (const PlotSeries& s : series) {
        if (s.x.size() != s.y.size()) throw config_error("plot series length mismatch");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                first = false;
            } else {
                xmin = std::min(xmin, s.x[i]);
                xmax = std::max(xmax, s.x[i]);
                ymin = std::min(ymin, s.y[i]);
                ymax = std::max(ymax, s.y[i]);
            }
        }
    }
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) ymax = ymin + 1.0;

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
    auto sy = [&](double y) { return kTop + plot_h - (y - ymin) / (ymax - ymin) * plot_h; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\">\n";
    out << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
    out << "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
           "font-family=\"sans-serif\">"
        << title << "</text>\n";

    const double xstep = nice_step(xmax - xmin);
    const double ystep = nice_step(ymax - ymin);
    out << "<g font-size=\"11\" font-family=\"sans-serif\" fill=\"#333\">\n";
    for (double t = std::ceil(xmin / xstep) * xstep; t <= xmax + 1e-9 * xstep; t += xstep) {
        const double px = sx(t);
        out << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(px)
            << "\" y2=\"" << fmt(kTop + plot_h) << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(kTop + plot_h + 16)
            << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
    }
    for (double t = std::ceil(ymin / ystep) * ystep; t <= ymax + 1e-9 * ystep; t += ystep) {
        const double py = sy(t);
        out << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(py) << "\" x2=\""
            << fmt(kLeft + plot_w) << "\" y2=\"" << fmt(py) << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << fmt(kLeft - 6) << "\" y=\"" << fmt(py + 4)
            << "\" text-anchor=\"end\">" << fmt(t) << "</text>\n";
    }
    out << "</g>\n";
    out << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(plot_w)
        << "\" height=\"" << fmt(plot_h) << "\" fill=\"none\" stroke=\"#333\"/>\n";

    for (const PlotSeries& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (i) out << " ";
            out << fmt(sx(s.x[i])) << "," << fmt(sy(s.y[i]));
        }
        out << "\"/>\n";
    }

    double legend_y = kTop + 14;
    for (const PlotSeries& s : series) {
        out << "<line x1=\"" << fmt(kLeft + plot_w - 150) << "\" y1=\"" << fmt(legend_y - 4)
            << "\" x2=\"" << fmt(kLeft + plot_w - 126) << "\" y2=\"" << fmt(legend_y - 4)
            << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << fmt(kLeft + plot_w - 120) << "\" y=\"" << fmt(legend_y)
            << "\" font-size=\"12\" font-family=\"sans-serif\">" << s.label << "</text>\n";
        legend_y += 16;
    }

    out << "<text x=\"" << fmt(kLeft + plot_w / 2) << "\" y=\"" << fmt(kHeight - 12)
        << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << x_label
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << fmt(kTop + plot_h / 2)
        << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
           "transform=\"rotate(-90 16 "
        << fmt(kTop + plot_h / 2) << ")\">" << y_label << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

}  // namespace fgmhd
