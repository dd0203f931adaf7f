#include "emfi/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace emfi {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 440;
constexpr int kMarginLeft = 60;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

const char* class_color(OutcomeClass c) {
    switch (c) {
        case OutcomeClass::C0: return "#d9d9d9";
        case OutcomeClass::C1: return "#f4a742";
        case OutcomeClass::C2: return "#d62728";
        case OutcomeClass::C3: return "#4a4a4a";
    }
    return "#000";
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

void svg_open(std::ostringstream& os, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
       << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    os << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\""
       << " font-size=\"15\">" << title << "</text>\n";
}

struct Scale {
    double lo, hi;
    double pix_lo, pix_hi;
    double operator()(double v) const {
        return pix_lo + (v - lo) / (hi - lo) * (pix_hi - pix_lo);
    }
};

void axis_labels(std::ostringstream& os, const Scale& x, const Scale& y, const std::string& x_name,
                 const std::string& y_name) {
    os << "<line x1=\"" << x.pix_lo << "\" y1=\"" << y.pix_lo << "\" x2=\"" << x.pix_hi
       << "\" y2=\"" << y.pix_lo << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << x.pix_lo << "\" y1=\"" << y.pix_lo << "\" x2=\"" << x.pix_lo
       << "\" y2=\"" << y.pix_hi << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double vx = x.lo + (x.hi - x.lo) * i / 4.0;
        const double vy = y.lo + (y.hi - y.lo) * i / 4.0;
        os << "<text x=\"" << x(vx) << "\" y=\"" << y.pix_lo + 18
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(vx)
           << "</text>\n";
        os << "<text x=\"" << x.pix_lo - 8 << "\" y=\"" << y(vy) + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(vy)
           << "</text>\n";
    }
    os << "<text x=\"" << (x.pix_lo + x.pix_hi) / 2 << "\" y=\"" << kHeight - 10
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_name
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << (y.pix_lo + y.pix_hi) / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
       << (y.pix_lo + y.pix_hi) / 2 << ")\">" << y_name << "</text>\n";
}

}  // namespace

std::string histogram_svg(const HistogramReport& report, double baseline_top1, double theta_major,
                          const std::string& title) {
    std::ostringstream os;
    svg_open(os, title);

    int64_t peak = 1;
    for (int64_t b : report.bins) peak = std::max(peak, b);

    const Scale x{0.0, 1.0, static_cast<double>(kMarginLeft),
                  static_cast<double>(kWidth - kMarginRight)};
    const Scale y{0.0, static_cast<double>(peak), static_cast<double>(kHeight - kMarginBottom),
                  static_cast<double>(kMarginTop)};
    axis_labels(os, x, y, "top-1 accuracy", "trials");

    const double bar_w = (x.pix_hi - x.pix_lo) / static_cast<double>(report.bins.size());
    for (size_t i = 0; i < report.bins.size(); ++i) {
        if (report.bins[i] == 0) continue;
        const double px = x.pix_lo + bar_w * static_cast<double>(i);
        const double py = y(static_cast<double>(report.bins[i]));
        os << "<rect x=\"" << fmt(px) << "\" y=\"" << fmt(py) << "\" width=\"" << fmt(bar_w)
           << "\" height=\"" << fmt(y.pix_lo - py) << "\" fill=\"#4878a8\"/>\n";
    }
    os << "<line x1=\"" << fmt(x(baseline_top1)) << "\" y1=\"" << y.pix_hi << "\" x2=\""
       << fmt(x(baseline_top1)) << "\" y2=\"" << y.pix_lo
       << "\" stroke=\"green\" stroke-width=\"1.5\"/>\n";
    const double thr = baseline_top1 - theta_major;
    os << "<line x1=\"" << fmt(x(thr)) << "\" y1=\"" << y.pix_hi << "\" x2=\"" << fmt(x(thr))
       << "\" y2=\"" << y.pix_lo
       << "\" stroke=\"red\" stroke-dasharray=\"5,4\" stroke-width=\"1.5\"/>\n";
    os << "</svg>\n";
    return os.str();
}

std::string spatial_scatter_svg(std::span<const TrialRecord> records, const std::string& title) {
    std::ostringstream os;
    svg_open(os, title);

    double x_lo = 113, x_hi = 127, y_lo = 148, y_hi = 160;
    for (const auto& r : records) {
        x_lo = std::min(x_lo, r.x_mm);
        x_hi = std::max(x_hi, r.x_mm);
        y_lo = std::min(y_lo, r.y_mm);
        y_hi = std::max(y_hi, r.y_mm);
    }
    const Scale x{x_lo, x_hi, static_cast<double>(kMarginLeft),
                  static_cast<double>(kWidth - kMarginRight)};
    const Scale y{y_lo, y_hi, static_cast<double>(kHeight - kMarginBottom),
                  static_cast<double>(kMarginTop)};
    axis_labels(os, x, y, "x (mm)", "y (mm)");

    // layering keeps rare persistent events visible over the background
    static const OutcomeClass layers[] = {OutcomeClass::C0, OutcomeClass::C1, OutcomeClass::C3,
                                          OutcomeClass::C2};
    for (OutcomeClass layer : layers) {
        for (const auto& r : records) {
            if (r.outcome_class != layer) continue;
            os << "<circle cx=\"" << fmt(x(r.x_mm)) << "\" cy=\"" << fmt(y(r.y_mm))
               << "\" r=\"2.2\" fill=\"" << class_color(layer) << "\" fill-opacity=\"0.8\"/>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

std::string rate_plane_svg(std::span<const GroupedRates> groups, const std::string& title) {
    std::ostringstream os;
    svg_open(os, title);

    const Scale x{0.0, 0.5, static_cast<double>(kMarginLeft),
                  static_cast<double>(kWidth - kMarginRight)};
    const Scale y{0.0, 0.5, static_cast<double>(kHeight - kMarginBottom),
                  static_cast<double>(kMarginTop)};
    axis_labels(os, x, y, "persistent-fault rate", "device-failure rate");

    for (const auto& g : groups) {
        const double px = x(std::min(g.rates.r_persist, 0.5));
        const double py = y(std::min(g.rates.r_fail, 0.5));
        const char* fill = g.timing == Timing::During ? "#d62728" : "#4878a8";
        os << "<circle cx=\"" << fmt(px) << "\" cy=\"" << fmt(py) << "\" r=\"5\" fill=\"" << fill
           << "\"/>\n";
        os << "<text x=\"" << fmt(px + 8) << "\" y=\"" << fmt(py + 4)
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << g.model << " "
           << to_string(g.timing) << "/" << to_string(g.mode) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace emfi
