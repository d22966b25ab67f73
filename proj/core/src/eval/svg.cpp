#include "dsec/eval/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "dsec/error.hpp"

namespace dsec::eval {

namespace {

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
constexpr double kSize = 400.0;
constexpr double kMargin = 50.0;

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

void header(std::ostream& out, const std::string& title) {
    const double w = kSize + 2 * kMargin;
    out << fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n", w);
    out << fmt::format("<rect width=\"{0}\" height=\"{0}\" fill=\"white\"/>\n", w);
    out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
                       w / 2, kMargin / 2, escape(title));
    out << fmt::format("<rect x=\"{0}\" y=\"{0}\" width=\"{1}\" height=\"{1}\" fill=\"none\" stroke=\"black\"/>\n", kMargin,
                       kSize);
}

} // namespace

void write_roc_svg(std::ostream& out, std::span<const NamedCurve> curves, const std::string& title) {
    header(out, title);
    auto px = [](double v) { return kMargin + v * kSize; };
    auto py = [](double v) { return kMargin + (1.0 - v) * kSize; };
    out << fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n", px(0),
                       py(0), px(1), py(1));
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const auto& roc = curves[c].curve;
        std::string points;
        for (std::size_t i = 0; i < roc.fpr.size(); ++i) {
            points += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", px(roc.fpr[i]), py(roc.tpr[i]));
        }
        const char* colour = kPalette[c % kPalette.size()];
        out << fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n", points, colour);
        out << fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{}\">{} (AUC {:.3f})</text>\n",
                           px(0.45), py(0.05) - 16.0 * static_cast<double>(curves.size() - 1 - c), colour,
                           escape(curves[c].name), roc.auc);
    }
    out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">false positive rate</text>\n",
                       px(0.5), kSize + kMargin * 1.7);
    out << fmt::format("<text x=\"{0}\" y=\"{1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 {0} {1})\">true positive rate</text>\n",
                       kMargin * 0.4, py(0.5));
    out << "</svg>\n";
}

void write_scatter_svg(std::ostream& out, const Matrix& points, std::span<const int> groups, const std::string& title) {
    if (points.cols() < 2) throw ShapeError(fmt::format("write_scatter_svg: need 2 columns, have {}", points.cols()));
    if (groups.size() != points.rows()) {
        throw ShapeError(fmt::format("write_scatter_svg: {} groups for {} points", groups.size(), points.rows()));
    }
    double lo_x = 0.0, hi_x = 1.0, lo_y = 0.0, hi_y = 1.0;
    if (points.rows() > 0) {
        lo_x = hi_x = points(0, 0);
        lo_y = hi_y = points(0, 1);
        for (std::size_t i = 1; i < points.rows(); ++i) {
            lo_x = std::min(lo_x, points(i, 0));
            hi_x = std::max(hi_x, points(i, 0));
            lo_y = std::min(lo_y, points(i, 1));
            hi_y = std::max(hi_y, points(i, 1));
        }
    }
    const double span_x = hi_x > lo_x ? hi_x - lo_x : 1.0;
    const double span_y = hi_y > lo_y ? hi_y - lo_y : 1.0;
    header(out, title);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const double x = kMargin + (points(i, 0) - lo_x) / span_x * kSize;
        const double y = kMargin + (1.0 - (points(i, 1) - lo_y) / span_y) * kSize;
        const auto g = static_cast<std::size_t>(std::max(groups[i], 0));
        out << fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2\" fill=\"{}\" fill-opacity=\"0.6\"/>\n", x, y,
                           kPalette[g % kPalette.size()]);
    }
    out << "</svg>\n";
}

} // namespace dsec::eval
