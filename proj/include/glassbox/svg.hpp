#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "glassbox/csv.hpp"
#include "glassbox/model.hpp"

namespace glassbox {

struct PlotStyle {
    double width = 640;
    double height = 400;
    double margin = 56;
    int samples = 512;                                   // points for smooth curves (>= 256)
    std::optional<std::pair<double, double>> y_range;    // shared y-scale across plots
    std::string line_color = "#1f4e9c";
    std::string positive_color = "#b2182b";
    std::string negative_color = "#2166ac";
};

namespace svg {

inline std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

inline std::string num(double v) { return csv::format_number(v); }

/// Short tick label.
inline std::string label(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

/// Linear map from data coordinates to the plot rectangle. The y axis points up.
struct Frame {
    double x0, x1, y0, y1;  // data ranges
    double left, right, top, bottom;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * (right - left); }
    double py(double y) const { return bottom - (y - y0) / (y1 - y0) * (bottom - top); }
};

inline Frame make_frame(const PlotStyle& st, std::pair<double, double> xr, std::pair<double, double> yr) {
    if (!(xr.first < xr.second)) {
        const double pad = std::max(std::abs(xr.first) * 0.05, 0.5);
        xr = {xr.first - pad, xr.first + pad};
    }
    if (!(yr.first < yr.second)) {
        const double pad = std::max(std::abs(yr.first) * 0.05, 1.0);
        yr = {yr.first - pad, yr.first + pad};
    }
    return {xr.first, xr.second, yr.first, yr.second, st.margin, st.width - st.margin / 2,
            st.margin / 2, st.height - st.margin};
}

/// y-range covering `values` and 0, padded by 5%, unless the style fixes it.
inline std::pair<double, double> y_range_for(std::span<const double> values, const PlotStyle& st) {
    if (st.y_range) return *st.y_range;
    double lo = 0.0, hi = 0.0;
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo == hi) return {-1.0, 1.0};
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

inline std::string open(const PlotStyle& st, std::string_view kind, const Frame* f) {
    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(st.width) << "\" height=\""
      << num(st.height) << "\" viewBox=\"0 0 " << num(st.width) << ' ' << num(st.height) << "\" data-kind=\"" << kind
      << '"';
    if (f)
        s << " data-x0=\"" << num(f->x0) << "\" data-x1=\"" << num(f->x1) << "\" data-y0=\"" << num(f->y0)
          << "\" data-y1=\"" << num(f->y1) << "\" data-left=\"" << num(f->left) << "\" data-right=\"" << num(f->right)
          << "\" data-top=\"" << num(f->top) << "\" data-bottom=\"" << num(f->bottom) << '"';
    s << ">\n<rect x=\"0\" y=\"0\" width=\"" << num(st.width) << "\" height=\"" << num(st.height)
      << "\" fill=\"white\"/>\n";
    return s.str();
}

inline std::string title(const PlotStyle& st, std::string_view text) {
    return "<text class=\"title\" x=\"" + num(st.width / 2) + "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
           escape(text) + "</text>\n";
}

inline std::string axes(const Frame& f, std::string_view x_label, std::string_view y_label, bool x_ticks = true) {
    std::ostringstream s;
    s << "<g class=\"axes\" stroke=\"#444\" stroke-width=\"1\" fill=\"none\">\n"
      << "<line x1=\"" << num(f.left) << "\" y1=\"" << num(f.bottom) << "\" x2=\"" << num(f.right) << "\" y2=\""
      << num(f.bottom) << "\"/>\n"
      << "<line x1=\"" << num(f.left) << "\" y1=\"" << num(f.top) << "\" x2=\"" << num(f.left) << "\" y2=\""
      << num(f.bottom) << "\"/>\n</g>\n";
    s << "<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#444\">\n";
    for (int k = 0; k <= 4; ++k) {
        const double t = static_cast<double>(k) / 4.0;
        const double yv = f.y0 + t * (f.y1 - f.y0);
        s << "<text x=\"" << num(f.left - 4) << "\" y=\"" << num(f.py(yv) + 3) << "\" text-anchor=\"end\">"
          << escape(label(yv)) << "</text>\n";
        if (x_ticks) {
            const double xv = f.x0 + t * (f.x1 - f.x0);
            s << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << num(f.bottom + 14) << "\" text-anchor=\"middle\">"
              << escape(label(xv)) << "</text>\n";
        }
    }
    s << "</g>\n";
    s << "<text class=\"xlabel\" x=\"" << num((f.left + f.right) / 2) << "\" y=\"" << num(f.bottom + 32)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(x_label) << "</text>\n";
    s << "<text class=\"ylabel\" x=\"14\" y=\"" << num((f.top + f.bottom) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << num((f.top + f.bottom) / 2) << ")\" font-family=\"sans-serif\" font-size=\"12\">" << escape(y_label)
      << "</text>\n";
    return s.str();
}

inline std::string zero_line(const Frame& f) {
    return "<line class=\"zero\" x1=\"" + num(f.left) + "\" y1=\"" + num(f.py(0.0)) + "\" x2=\"" + num(f.right) +
           "\" y2=\"" + num(f.py(0.0)) + "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
}

inline std::string polyline(const Frame& f, std::span<const std::pair<double, double>> pts, std::string_view cls,
                            std::string_view color) {
    std::ostringstream s;
    s << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t k = 0; k < pts.size(); ++k) s << (k ? " " : "") << num(f.px(pts[k].first)) << ',' << num(f.py(pts[k].second));
    s << "\"/>\n";
    return s.str();
}

/// Diverging white-centered scale: -1 -> negative color, 0 -> white, +1 -> positive color.
inline std::string diverging_color(double t, const PlotStyle& st) {
    t = std::clamp(t, -1.0, 1.0);
    const std::string& hex = t < 0 ? st.negative_color : st.positive_color;
    auto channel = [&](int k) { return std::stoi(hex.substr(1 + 2 * static_cast<std::size_t>(k), 2), nullptr, 16); };
    const double a = std::abs(t);
    char buf[8];
    int rgb[3];
    for (int k = 0; k < 3; ++k) rgb[k] = static_cast<int>(std::lround(255.0 + a * (channel(k) - 255.0)));
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return buf;
}

}  // namespace svg

/// Plot of a one-feature term. Step shapes are drawn as exact steps (one horizontal segment per
/// bin), smooth shapes as a polyline of style.samples points, categorical tables as bars.
/// `x_range` is the training range of the feature; the plot always covers every threshold.
inline std::string render_shape_svg(const Term& term, std::string_view name, const PlotStyle& style = {},
                                    std::optional<std::pair<double, double>> x_range = std::nullopt) {
    if (term.is_pair() || is_2d(term.shape)) throw DataError("render_shape_svg needs a 1D term; use render_heatmap_svg");
    if (style.samples < 256) throw ConfigError("plots need at least 256 samples");
    std::string body;
    std::string kind(variant_name(term.shape));

    if (const auto* t = std::get_if<CategoricalTable>(&term.shape)) {
        const auto yr = svg::y_range_for(t->values, style);
        const auto f = svg::make_frame(style, {0.0, static_cast<double>(std::max<std::size_t>(t->values.size(), 1))}, yr);
        body += svg::axes(f, name, "contribution", false);
        const double slot = (f.right - f.left) / static_cast<double>(std::max<std::size_t>(t->values.size(), 1));
        body += "<g class=\"bars\">\n";
        for (std::size_t k = 0; k < t->values.size(); ++k) {
            const double v = t->values[k];
            const double y = std::min(f.py(v), f.py(0.0));
            const double h = std::abs(f.py(v) - f.py(0.0));
            body += "<rect class=\"bar\" data-level=\"" + svg::escape(t->levels[k]) + "\" data-value=\"" + svg::num(v) +
                    "\" x=\"" + svg::num(f.left + slot * (static_cast<double>(k) + 0.15)) + "\" y=\"" + svg::num(y) +
                    "\" width=\"" + svg::num(slot * 0.7) + "\" height=\"" + svg::num(h) + "\" fill=\"" +
                    (v >= 0 ? style.positive_color : style.negative_color) + "\"/>\n";
            body += "<text x=\"" + svg::num(f.left + slot * (static_cast<double>(k) + 0.5)) + "\" y=\"" +
                    svg::num(f.bottom + 14) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
                    svg::escape(t->levels[k]) + "</text>\n";
        }
        body += "</g>\n" + svg::zero_line(f);
        return svg::open(style, kind, &f) + svg::title(style, name) + body + "</svg>\n";
    }

    std::vector<std::pair<double, double>> pts;
    std::pair<double, double> xr;
    if (const auto* s = std::get_if<BinnedStep1D>(&term.shape)) {
        const auto& th = s->thresholds;
        if (th.empty()) {
            xr = x_range.value_or(std::pair{-1.0, 1.0});
        } else {
            const double span = th.size() > 1 ? th.back() - th.front() : std::max(std::abs(th.front()), 1.0);
            xr = {th.front() - 0.05 * span, th.back() + 0.05 * span};
            if (x_range) xr = {std::min(xr.first, x_range->first), std::max(xr.second, x_range->second)};
            if (!(xr.first < th.front())) xr.first = th.front() - 0.05 * span;
            if (!(xr.second > th.back())) xr.second = th.back() + 0.05 * span;
        }
        if (!(xr.first < xr.second)) xr = {xr.first - 0.5, xr.first + 0.5};
        const std::size_t b = s->values.size();
        for (std::size_t k = 0; k < b; ++k) {
            const double a = k == 0 ? xr.first : th[k - 1];
            const double e = k + 1 == b ? xr.second : th[k];
            pts.emplace_back(a, s->values[k]);
            pts.emplace_back(e, s->values[k]);
        }
    } else {
        if (const auto* sp = std::get_if<SplineCurve1D>(&term.shape)) {
            const auto p = static_cast<std::size_t>(sp->degree);
            xr = {sp->knots[p], sp->knots[sp->knots.size() - p - 1]};
        } else {
            const auto& sm = std::get<Sampled1D>(term.shape);
            xr = {sm.grid.front(), sm.grid.back()};
        }
        if (x_range) xr = {std::min(xr.first, x_range->first), std::max(xr.second, x_range->second)};
        if (!(xr.first < xr.second)) xr = {xr.first - 0.5, xr.first + 0.5};
        const auto n = static_cast<std::size_t>(style.samples);
        for (std::size_t k = 0; k < n; ++k) {
            double x = xr.first + (xr.second - xr.first) * static_cast<double>(k) / static_cast<double>(n - 1);
            if (k + 1 == n) x = xr.second;
            pts.emplace_back(x, evaluate_shape(term.shape, x));
        }
    }
    std::vector<double> ys;
    for (const auto& p : pts) ys.push_back(p.second);
    const auto f = svg::make_frame(style, xr, svg::y_range_for(ys, style));
    body += svg::axes(f, name, "contribution");
    body += svg::zero_line(f);
    body += svg::polyline(f, pts, std::holds_alternative<BinnedStep1D>(term.shape) ? "step" : "curve", style.line_color);
    return svg::open(style, kind, &f) + svg::title(style, name) + body + "</svg>\n";
}

/// Heatmap of a Grid2D term: one cell per grid value, colored on a diverging scale centered at 0
/// and normalized by the largest |value|, plus a legend.
inline std::string render_heatmap_svg(const Term& term, std::string_view name, std::string_view row_name,
                                      std::string_view col_name, const PlotStyle& style = {}) {
    const auto* g = std::get_if<Grid2D>(&term.shape);
    if (!g) throw DataError("render_heatmap_svg needs a Grid2D term");
    const std::size_t nr = g->n_rows(), nc = g->n_cols();
    double vmax = 0.0;
    for (double v : g->values) vmax = std::max(vmax, std::abs(v));
    const double legend_w = 70;
    const double left = style.margin, right = style.width - style.margin / 2 - legend_w;
    const double top = style.margin / 2, bottom = style.height - style.margin;
    const double cw = (right - left) / static_cast<double>(nc), ch = (bottom - top) / static_cast<double>(nr);

    std::ostringstream s;
    s << svg::open(style, "grid2d", nullptr) << svg::title(style, name);
    s << "<g class=\"cells\">\n";
    for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t c = 0; c < nc; ++c) {
            const double v = g->at(r, c);
            const double t = vmax > 0 ? v / vmax : 0.0;
            // Row 0 at the bottom so the first feature increases upward.
            s << "<rect class=\"cell\" data-row=\"" << r << "\" data-col=\"" << c << "\" data-value=\"" << svg::num(v)
              << "\" x=\"" << svg::num(left + cw * static_cast<double>(c)) << "\" y=\""
              << svg::num(bottom - ch * static_cast<double>(r + 1)) << "\" width=\"" << svg::num(cw) << "\" height=\""
              << svg::num(ch) << "\" fill=\"" << svg::diverging_color(t, style) << "\"/>\n";
        }
    s << "</g>\n<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"9\" fill=\"#444\">\n";
    const std::size_t col_step = std::max<std::size_t>(1, g->col_thresholds.size() / 8);
    for (std::size_t k = 0; k < g->col_thresholds.size(); k += col_step)
        s << "<text x=\"" << svg::num(left + cw * static_cast<double>(k + 1)) << "\" y=\"" << svg::num(bottom + 12)
          << "\" text-anchor=\"middle\">" << svg::escape(svg::label(g->col_thresholds[k])) << "</text>\n";
    const std::size_t row_step = std::max<std::size_t>(1, g->row_thresholds.size() / 8);
    for (std::size_t k = 0; k < g->row_thresholds.size(); k += row_step)
        s << "<text x=\"" << svg::num(left - 4) << "\" y=\"" << svg::num(bottom - ch * static_cast<double>(k + 1) + 3)
          << "\" text-anchor=\"end\">" << svg::escape(svg::label(g->row_thresholds[k])) << "</text>\n";
    s << "</g>\n";
    s << "<text class=\"xlabel\" x=\"" << svg::num((left + right) / 2) << "\" y=\"" << svg::num(bottom + 30)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << svg::escape(col_name) << "</text>\n";
    s << "<text class=\"ylabel\" x=\"14\" y=\"" << svg::num((top + bottom) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << svg::num((top + bottom) / 2) << ")\" font-family=\"sans-serif\" font-size=\"12\">" << svg::escape(row_name)
      << "</text>\n";

    // Legend: 21 swatches from -vmax (bottom) to +vmax (top).
    const double lx = right + 20, lw = 16, steps = 21, lh = (bottom - top) / steps;
    s << "<g class=\"legend\" data-vmax=\"" << svg::num(vmax) << "\">\n";
    for (int k = 0; k < static_cast<int>(steps); ++k) {
        const double t = -1.0 + 2.0 * k / (steps - 1);
        s << "<rect class=\"swatch\" x=\"" << svg::num(lx) << "\" y=\"" << svg::num(bottom - lh * (k + 1)) << "\" width=\""
          << svg::num(lw) << "\" height=\"" << svg::num(lh) << "\" fill=\"" << svg::diverging_color(t, style) << "\"/>\n";
    }
    s << "<text x=\"" << svg::num(lx + lw + 3) << "\" y=\"" << svg::num(top + 8)
      << "\" font-family=\"sans-serif\" font-size=\"9\">" << svg::escape(svg::label(vmax)) << "</text>\n"
      << "<text x=\"" << svg::num(lx + lw + 3) << "\" y=\"" << svg::num((top + bottom) / 2 + 3)
      << "\" font-family=\"sans-serif\" font-size=\"9\">0</text>\n"
      << "<text x=\"" << svg::num(lx + lw + 3) << "\" y=\"" << svg::num(bottom)
      << "\" font-family=\"sans-serif\" font-size=\"9\">" << svg::escape(svg::label(-vmax)) << "</text>\n</g>\n";
    s << "</svg>\n";
    return s.str();
}

/// Horizontal bar chart of (name, importance), already sorted descending; at most `top_n` bars,
/// lengths proportional to importance.
inline std::string render_importance_bars(std::span<const std::pair<std::string, double>> ranked, int top_n,
                                          const PlotStyle& style = {}) {
    if (top_n < 1) throw ConfigError("topN must be >= 1");
    const std::size_t n = std::min(ranked.size(), static_cast<std::size_t>(top_n));
    double vmax = 0.0;
    for (std::size_t k = 0; k < n; ++k) vmax = std::max(vmax, ranked[k].second);
    const double left = style.margin * 3, right = style.width - style.margin / 2;
    const double top = style.margin / 2, bottom = style.height - style.margin / 2;
    const double slot = (bottom - top) / static_cast<double>(std::max<std::size_t>(n, 1));
    std::ostringstream s;
    s << svg::open(style, "importance", nullptr) << svg::title(style, "Feature importance (mean |contribution|)");
    s << "<g class=\"bars\">\n";
    for (std::size_t k = 0; k < n; ++k) {
        const double w = vmax > 0 ? ranked[k].second / vmax * (right - left) : 0.0;
        const double y = top + slot * static_cast<double>(k);
        s << "<rect class=\"bar\" data-term=\"" << svg::escape(ranked[k].first) << "\" data-importance=\""
          << svg::num(ranked[k].second) << "\" x=\"" << svg::num(left) << "\" y=\"" << svg::num(y + slot * 0.15)
          << "\" width=\"" << svg::num(w) << "\" height=\"" << svg::num(slot * 0.7) << "\" fill=\"" << style.line_color
          << "\"/>\n";
        s << "<text x=\"" << svg::num(left - 6) << "\" y=\"" << svg::num(y + slot * 0.5 + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << svg::escape(ranked[k].first)
          << "</text>\n";
    }
    s << "</g>\n</svg>\n";
    return s.str();
}

}  // namespace glassbox
